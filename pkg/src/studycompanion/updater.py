"""Fold extracted signals into the learner profile, with an audit trail.

The updater is a pure transformation: (profile, messages) in, (profile,
delta) out. Every field it touches produces a DeltaEntry, and replaying
the delta over the old profile reproduces the new one exactly. That
replay property is what makes the profile pipeline auditable end to end.

Hits apply sequentially in message order, and within a message in a
fixed category order (bloom, weak topics, frustration, engagement,
reflection, strategy, questions). Order matters at the clamping
boundaries: applying one step at a time is not the same as summing
first and clamping once.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from typing import Any, Sequence

from .profile import (
    LearnerProfile,
    Mood,
    StrategyPreference,
    adjust_trait,
)
from .signals import KeywordDictionary, extract_signals

# Tie-break for the dominant mood: negative states first, because they
# trigger safety-relevant strategies and should not lose a coin flip.
_MOOD_PRIORITY = (
    Mood.FRUSTRATED,
    Mood.ANXIOUS,
    Mood.CONFIDENT,
    Mood.CURIOUS,
    Mood.ENGAGED,
    Mood.NEUTRAL,
)

_KT_INITIAL = 0.5


@dataclass(frozen=True)
class UpdatePolicy:
    """Step sizes for trait adjustments. All steps must be in (0, 0.5]."""

    efficacy_step: float = 0.1
    motivation_step: float = 0.1
    reflection_step: float = 0.05
    kt_step: float = 0.1

    def __post_init__(self) -> None:
        for name in ("efficacy_step", "motivation_step", "reflection_step", "kt_step"):
            step = getattr(self, name)
            if not 0 < step <= 0.5:
                raise ValueError(f"{name} must be in (0, 0.5], got {step!r}")


@dataclass(frozen=True)
class DeltaEntry:
    """One audited field change: where, from what, to what, and why."""

    path: str
    old: Any
    new: Any
    signal: str

    def to_doc(self) -> dict[str, Any]:
        return {"path": self.path, "old": self.old, "new": self.new, "signal": self.signal}

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "DeltaEntry":
        return cls(path=doc["path"], old=doc["old"], new=doc["new"], signal=doc["signal"])


def _dominant_mood(counter: Counter) -> Mood:
    return max(counter, key=lambda mood: (counter[mood], -_MOOD_PRIORITY.index(mood)))


def update_profile_from_interaction(
    profile: LearnerProfile,
    messages: Sequence[str],
    dictionary: KeywordDictionary,
    policy: UpdatePolicy | None = None,
) -> tuple[LearnerProfile, list[DeltaEntry]]:
    """Apply every signal in the given user messages to the profile.

    Per message: the Bloom level max-folds (it never decreases here),
    weak topics are added with their tracing score decremented, each
    frustration hit steps self-efficacy and motivation down, each
    engagement hit steps them up, reflection hits raise reflection
    ability, a strategy marker overwrites the preference, and question
    evidence advances the running question frequency. The mood is set
    once at the end from the dominant sentiment over all messages.

    Returns the new profile plus the ordered delta log. ``updated_at``
    is never touched here; stamping is the caller's job.
    """
    policy = policy or UpdatePolicy()
    current = profile
    entries: list[DeltaEntry] = []
    moods: Counter = Counter()

    def log(path: str, old: Any, new: Any, signal: str) -> None:
        entries.append(DeltaEntry(path=path, old=old, new=new, signal=signal))

    for index, message in enumerate(messages):
        signals = extract_signals(message, dictionary)
        tag = f"message[{index}]"
        moods += signals.mood_counter()

        if signals.bloom_hits:
            target = max(signals.bloom_hits)
            if target > current.cognitive.bloom_level:
                log(
                    "cognitive.bloom_level",
                    current.cognitive.bloom_level.label,
                    target.label,
                    f"{tag}:bloom:{target.label}",
                )
                current = replace(current, cognitive=replace(current.cognitive, bloom_level=target))

        for topic in sorted(signals.weak_topic_hits):
            if topic not in current.cognitive.weak_topics:
                old_topics = sorted(current.cognitive.weak_topics)
                new_set = current.cognitive.weak_topics | {topic}
                log("cognitive.weak_topics", old_topics, sorted(new_set), f"{tag}:weak_topic:{topic}")
                current = replace(current, cognitive=replace(current.cognitive, weak_topics=new_set))
            old_kt = current.cognitive.knowledge_tracing.get(topic, _KT_INITIAL)
            new_kt = adjust_trait(old_kt, -policy.kt_step)
            log(f"cognitive.knowledge_tracing.{topic}", old_kt, new_kt, f"{tag}:weak_topic:{topic}")
            tracing = dict(current.cognitive.knowledge_tracing)
            tracing[topic] = new_kt
            current = replace(current, cognitive=replace(current.cognitive, knowledge_tracing=tracing))

        for _ in range(signals.frustration_count):
            old_eff = current.emotional.self_efficacy
            new_eff = adjust_trait(old_eff, -policy.efficacy_step)
            log("emotional.self_efficacy", old_eff, new_eff, f"{tag}:frustration")
            old_mot = current.emotional.motivation
            new_mot = adjust_trait(old_mot, -policy.motivation_step)
            log("emotional.motivation", old_mot, new_mot, f"{tag}:frustration")
            current = replace(
                current,
                emotional=replace(current.emotional, self_efficacy=new_eff, motivation=new_mot),
            )
        if signals.frustration_count:
            old_count = current.emotional.frustration_count
            new_count = old_count + signals.frustration_count
            log("emotional.frustration_count", old_count, new_count, f"{tag}:frustration")
            current = replace(current, emotional=replace(current.emotional, frustration_count=new_count))

        for _ in range(signals.engagement_count):
            old_eff = current.emotional.self_efficacy
            new_eff = adjust_trait(old_eff, policy.efficacy_step)
            log("emotional.self_efficacy", old_eff, new_eff, f"{tag}:engagement")
            old_mot = current.emotional.motivation
            new_mot = adjust_trait(old_mot, policy.motivation_step)
            log("emotional.motivation", old_mot, new_mot, f"{tag}:engagement")
            current = replace(
                current,
                emotional=replace(current.emotional, self_efficacy=new_eff, motivation=new_mot),
            )

        for _ in range(signals.reflection_count):
            old_refl = current.metacognitive.reflection_ability
            new_refl = adjust_trait(old_refl, policy.reflection_step)
            log("metacognitive.reflection_ability", old_refl, new_refl, f"{tag}:reflection")
            current = replace(
                current, metacognitive=replace(current.metacognitive, reflection_ability=new_refl)
            )

        if (
            signals.strategy_hit is not StrategyPreference.UNSET
            and signals.strategy_hit is not current.metacognitive.preferred_strategy
        ):
            log(
                "metacognitive.preferred_strategy",
                current.metacognitive.preferred_strategy.value,
                signals.strategy_hit.value,
                f"{tag}:strategy:{signals.strategy_hit.value}",
            )
            current = replace(
                current,
                metacognitive=replace(current.metacognitive, preferred_strategy=signals.strategy_hit),
            )

        if signals.question_count:
            old_total = current.behavioral.question_total
            new_total = old_total + signals.question_count
            log("behavioral.question_total", old_total, new_total, f"{tag}:question")
            old_freq = current.behavioral.question_frequency
            new_freq = _frequency(new_total, current.behavioral.session_count)
            if new_freq != old_freq:
                log("behavioral.question_frequency", old_freq, new_freq, f"{tag}:question")
            current = replace(
                current,
                behavioral=replace(
                    current.behavioral, question_total=new_total, question_frequency=new_freq
                ),
            )

    if moods:
        dominant = _dominant_mood(moods)
        if dominant is not current.emotional.current_mood:
            log(
                "emotional.current_mood",
                current.emotional.current_mood.value,
                dominant.value,
                "interaction:dominant_sentiment",
            )
            current = replace(current, emotional=replace(current.emotional, current_mood=dominant))

    return current, entries


def _frequency(total: int, sessions: int) -> float:
    # With no session begun yet the provisional denominator is one.
    return round(total / max(sessions, 1), 9)


def begin_session(profile: LearnerProfile) -> LearnerProfile:
    """Bump the session counter and re-derive the question frequency."""
    sessions = profile.behavioral.session_count + 1
    return replace(
        profile,
        behavioral=replace(
            profile.behavioral,
            session_count=sessions,
            question_frequency=_frequency(profile.behavioral.question_total, sessions),
        ),
    )


def apply_delta(profile: LearnerProfile, entries: Sequence[DeltaEntry]) -> LearnerProfile:
    """Replay a delta log over a profile by setting each path to its new value.

    This is the audit check: ``apply_delta(pre, delta)`` must equal the
    profile the updater returned, field for field.
    """
    doc = profile.to_doc()
    for entry in entries:
        node = doc
        parts = entry.path.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = entry.new
    return LearnerProfile.from_doc(doc)
