"""Compose the per-turn system prompt from template, profile, and strategy.

The prompt has three sections in fixed order: the pedagogical base
template (seven behavioral rules plus a subject extension), a
human-readable profile summary, and the strategy block when one fired.
Same inputs produce byte-identical prompts; there is no randomness and
no clock anywhere in this module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .profile import LearnerProfile
from .signals import IntentCategory
from .strategy import StrategyBlock

_SUMMARY_ANCHOR = "{{profile_summary}}"
_STRATEGY_ANCHOR = "{{strategy_block}}"

# Categories with their own extension file; the rest reuse general
# plus a one-line focus note.
_OWN_EXTENSION = (
    IntentCategory.MATH,
    IntentCategory.CHINESE,
    IntentCategory.SCIENCE,
    IntentCategory.GENERAL,
)


def render_learner_summary(profile: LearnerProfile) -> str:
    """Multi-line profile summary for injection; deterministic field order."""
    weak = ", ".join(sorted(profile.cognitive.weak_topics)) or "none"
    focus = ", ".join(profile.contextual.subject_focus) or "none"
    return "\n".join(
        [
            "Learner profile:",
            f"- Grade: {profile.contextual.grade}",
            f"- Subject focus: {focus}",
            f"- Bloom level: {profile.cognitive.bloom_level.label}",
            f"- Mood: {profile.emotional.current_mood.value}",
            f"- Self-efficacy: {profile.emotional.self_efficacy:.2f}",
            f"- Motivation: {profile.emotional.motivation:.2f}",
            f"- Weak topics: {weak}",
            f"- Preferred strategy: {profile.metacognitive.preferred_strategy.value}",
        ]
    )


@dataclass(frozen=True)
class PromptBundle:
    system_prompt: str
    sections: tuple[tuple[str, str], ...]

    def section(self, name: str) -> str | None:
        for key, text in self.sections:
            if key == name:
                return text
        return None


class PromptAssembler:
    """Loads the template set once and composes prompts from it.

    ``style`` and ``detail`` pick among authored phrasings of the base
    template's tone and verbosity notes; they never alter the seven
    behavioral rules.
    """

    def __init__(
        self,
        templates_dir: str | Path | None = None,
        style: str = "warm",
        detail: str = "concise",
    ) -> None:
        self._read = self._make_reader(templates_dir)
        self.base = self._read("heads_base.txt")
        if _SUMMARY_ANCHOR not in self.base or _STRATEGY_ANCHOR not in self.base:
            raise ValueError("base template must contain the summary and strategy anchors")
        variants = json.loads(self._read("style_variants.json"))
        try:
            self.style_note = variants["style"][style]
            self.detail_note = variants["detail"][detail]
        except KeyError as missing:
            raise ValueError(f"unknown template variant: {missing}") from None
        self.style = style
        self.detail = detail
        self._extensions = {
            category: self._read(f"heads_{category.value}.txt").strip()
            for category in _OWN_EXTENSION
        }
        for category in IntentCategory:
            if category not in self._extensions:
                extra = self._read(f"extra_{category.value}.txt").strip()
                self._extensions[category] = (
                    self._extensions[IntentCategory.GENERAL] + "\n" + extra
                )

    @staticmethod
    def _make_reader(templates_dir: str | Path | None):
        if templates_dir is None:
            root = resources.files("studycompanion") / "data" / "templates"
            return lambda name: (root / name).read_text(encoding="utf-8")
        directory = Path(templates_dir)
        return lambda name: (directory / name).read_text(encoding="utf-8")

    def compose(
        self,
        subject: IntentCategory,
        profile: LearnerProfile,
        strategy: StrategyBlock,
    ) -> PromptBundle:
        filled = (
            self.base.replace("{{style_note}}", self.style_note)
            .replace("{{detail_note}}", self.detail_note)
            .replace("{{subject_extension}}", self._extensions[subject])
        )
        head, rest = filled.split(_SUMMARY_ANCHOR, 1)
        between, _ = rest.split(_STRATEGY_ANCHOR, 1)
        if between.strip():
            raise ValueError("only whitespace may separate the summary and strategy anchors")
        sections = [
            ("heads", head.rstrip("\n")),
            ("profile_summary", render_learner_summary(profile)),
        ]
        if strategy.rendered:
            sections.append(("strategy_block", strategy.rendered))
        return PromptBundle(
            system_prompt="\n\n".join(text for _, text in sections),
            sections=tuple(sections),
        )


_DEFAULT_ASSEMBLER: PromptAssembler | None = None


def compose_system_prompt(
    subject: IntentCategory,
    profile: LearnerProfile,
    strategy: StrategyBlock,
    assembler: PromptAssembler | None = None,
) -> PromptBundle:
    global _DEFAULT_ASSEMBLER
    if assembler is None:
        if _DEFAULT_ASSEMBLER is None:
            _DEFAULT_ASSEMBLER = PromptAssembler()
        assembler = _DEFAULT_ASSEMBLER
    return assembler.compose(subject, profile, strategy)
