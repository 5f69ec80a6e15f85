"""Rule-based adaptive strategy selection.

Seven fixed rules, each a pure predicate over the profile plus an
instruction template. Fired rules compose into one text block that the
prompt assembler injects; the block is the audit surface an educator
reads to see why the companion behaves the way it does, so the rule
texts live in a data file, not in code.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable

from .profile import BloomLevel, LearnerProfile, StrategyPreference

STRATEGY_HEADER = "[Adaptive Teaching Strategy]"

# Thresholds are strict inequalities; boundary equality does not fire.
LOW_EFFICACY = 0.3
HIGH_FRUSTRATION = 5
HIGH_MOTIVATION = 0.8
MANY_WEAK_TOPICS = 3


@dataclass(frozen=True)
class StrategyRule:
    rule_id: str
    name: str
    predicate: Callable[[LearnerProfile], bool]
    lines: tuple[str, ...]

    def fires(self, profile: LearnerProfile) -> bool:
        return self.predicate(profile)


@dataclass(frozen=True)
class StrategyBlock:
    fired: tuple[str, ...]
    rendered: str

    def to_doc(self) -> dict:
        return {"fired": list(self.fired), "rendered": self.rendered}


_PREDICATES: dict[str, Callable[[LearnerProfile], bool]] = {
    "R1": lambda p: p.emotional.self_efficacy < LOW_EFFICACY
    or p.emotional.frustration_count > HIGH_FRUSTRATION,
    "R2": lambda p: p.emotional.motivation > HIGH_MOTIVATION,
    "R3": lambda p: len(p.cognitive.weak_topics) > MANY_WEAK_TOPICS,
    "R4": lambda p: p.cognitive.bloom_level is BloomLevel.REMEMBER,
    "R5": lambda p: p.cognitive.bloom_level is BloomLevel.APPLY,
    "R6": lambda p: p.metacognitive.preferred_strategy is StrategyPreference.GUIDED,
    "R7": lambda p: p.metacognitive.preferred_strategy is StrategyPreference.EXPLORATORY,
}

_RULE_ORDER = ("R1", "R2", "R3", "R4", "R5", "R6", "R7")


def load_rules(path: str | Path | None = None) -> tuple[StrategyRule, ...]:
    """Build the rule set from the instruction-template data file."""
    if path is not None:
        raw = Path(path).read_text(encoding="utf-8")
    else:
        raw = (
            resources.files("studycompanion") / "data" / "templates" / "strategy_rules.json"
        ).read_text(encoding="utf-8")
    doc = json.loads(raw)
    rules = []
    for rule_id in _RULE_ORDER:
        entry = doc[rule_id]
        if not entry["lines"]:
            raise ValueError(f"rule {rule_id} has empty instruction text")
        rules.append(
            StrategyRule(
                rule_id=rule_id,
                name=entry["name"],
                predicate=_PREDICATES[rule_id],
                lines=tuple(entry["lines"]),
            )
        )
    return tuple(rules)


_DEFAULT_RULES: tuple[StrategyRule, ...] | None = None


def _default_rules() -> tuple[StrategyRule, ...]:
    global _DEFAULT_RULES
    if _DEFAULT_RULES is None:
        _DEFAULT_RULES = load_rules()
    return _DEFAULT_RULES


def generate_strategy(
    profile: LearnerProfile, rules: tuple[StrategyRule, ...] | None = None
) -> StrategyBlock:
    """Evaluate all rules in fixed order and compose the fired ones.

    No rule fired means an empty block: no header, nothing injected.
    """
    rules = rules if rules is not None else _default_rules()
    fired = [rule for rule in rules if rule.fires(profile)]
    if not fired:
        return StrategyBlock(fired=(), rendered="")
    lines = [STRATEGY_HEADER]
    for rule in fired:
        lines.extend(rule.lines)
    return StrategyBlock(
        fired=tuple(rule.rule_id for rule in fired),
        rendered="\n".join(lines),
    )
