"""Five-dimension learner profile: types, defaults, and clamped trait arithmetic.

Profiles are plain immutable data. Every update produces a new value via
``dataclasses.replace``; nothing here mutates in place, so concurrent readers
are always safe and the single-writer rule is enforced one level up.

Each dimension serializes to its own JSON document with snake_case field
names. Unknown fields found in stored documents are kept in ``extra`` and
re-emitted on serialization, so the schema can grow without migrations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum, IntEnum
from typing import Any

# Trait steps are decimal (0.1, 0.05); quantizing after each operation keeps
# the arithmetic exact in decimal terms (0.35 - 0.1 == 0.25, not 0.2499...97).
_TRAIT_DECIMALS = 9


class BloomLevel(IntEnum):
    """Cognitive-skill ladder; comparisons use the ordinal values."""

    REMEMBER = 1
    UNDERSTAND = 2
    APPLY = 3
    ANALYZE = 4
    EVALUATE = 5
    CREATE = 6

    @classmethod
    def from_name(cls, name: str) -> "BloomLevel":
        try:
            return cls[name.upper()]
        except KeyError:
            raise ValueError(f"unknown bloom level: {name!r}") from None

    @property
    def label(self) -> str:
        return self.name.lower()


class Mood(str, Enum):
    CONFIDENT = "confident"
    CURIOUS = "curious"
    FRUSTRATED = "frustrated"
    ANXIOUS = "anxious"
    ENGAGED = "engaged"
    NEUTRAL = "neutral"


class StrategyPreference(str, Enum):
    GUIDED = "guided"
    EXPLORATORY = "exploratory"
    UNSET = "unset"


def clamp01(value: float) -> float:
    return min(1.0, max(0.0, value))


def adjust_trait(value: float, delta: float) -> float:
    """Saturating add on a 0..1 trait: result = clamp(value + delta)."""
    return round(clamp01(value + delta), _TRAIT_DECIMALS)


def _pop_extra(doc: dict[str, Any], known: tuple[str, ...]) -> dict[str, Any]:
    return {k: v for k, v in doc.items() if k not in known}


@dataclass(frozen=True)
class CognitiveDim:
    bloom_level: BloomLevel = BloomLevel.REMEMBER
    knowledge_state: dict[str, str] = field(default_factory=dict)
    weak_topics: frozenset[str] = frozenset()
    knowledge_tracing: dict[str, float] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)

    def to_doc(self) -> dict[str, Any]:
        return {
            "bloom_level": self.bloom_level.label,
            "knowledge_state": dict(self.knowledge_state),
            "weak_topics": sorted(self.weak_topics),
            "knowledge_tracing": dict(self.knowledge_tracing),
            **self.extra,
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "CognitiveDim":
        return cls(
            bloom_level=BloomLevel.from_name(doc.get("bloom_level", "remember")),
            knowledge_state=dict(doc.get("knowledge_state", {})),
            weak_topics=frozenset(doc.get("weak_topics", [])),
            knowledge_tracing={k: float(v) for k, v in doc.get("knowledge_tracing", {}).items()},
            extra=_pop_extra(doc, ("bloom_level", "knowledge_state", "weak_topics", "knowledge_tracing")),
        )


@dataclass(frozen=True)
class BehavioralDim:
    session_count: int = 0
    question_frequency: float = 0.0
    tool_usage: dict[str, int] = field(default_factory=dict)
    # Running total behind question_frequency (frequency = total / sessions).
    question_total: int = 0
    extra: dict[str, Any] = field(default_factory=dict)

    def to_doc(self) -> dict[str, Any]:
        return {
            "session_count": self.session_count,
            "question_frequency": self.question_frequency,
            "tool_usage": dict(self.tool_usage),
            "question_total": self.question_total,
            **self.extra,
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "BehavioralDim":
        session_count = int(doc.get("session_count", 0))
        frequency = float(doc.get("question_frequency", 0.0))
        if "question_total" in doc:
            total = int(doc["question_total"])
        else:
            # Older rows predate question_total; reconstruct it from the average.
            total = round(frequency * session_count)
        return cls(
            session_count=session_count,
            question_frequency=frequency,
            tool_usage={k: int(v) for k, v in doc.get("tool_usage", {}).items()},
            question_total=total,
            extra=_pop_extra(doc, ("session_count", "question_frequency", "tool_usage", "question_total")),
        )


@dataclass(frozen=True)
class EmotionalDim:
    current_mood: Mood = Mood.NEUTRAL
    self_efficacy: float = 0.5
    motivation: float = 0.5
    frustration_count: int = 0
    extra: dict[str, Any] = field(default_factory=dict)

    def to_doc(self) -> dict[str, Any]:
        return {
            "current_mood": self.current_mood.value,
            "self_efficacy": self.self_efficacy,
            "motivation": self.motivation,
            "frustration_count": self.frustration_count,
            **self.extra,
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "EmotionalDim":
        return cls(
            current_mood=Mood(doc.get("current_mood", "neutral")),
            self_efficacy=float(doc.get("self_efficacy", 0.5)),
            motivation=float(doc.get("motivation", 0.5)),
            frustration_count=int(doc.get("frustration_count", 0)),
            extra=_pop_extra(doc, ("current_mood", "self_efficacy", "motivation", "frustration_count")),
        )


@dataclass(frozen=True)
class MetacognitiveDim:
    self_regulation: float = 0.5
    preferred_strategy: StrategyPreference = StrategyPreference.UNSET
    reflection_ability: float = 0.5
    extra: dict[str, Any] = field(default_factory=dict)

    def to_doc(self) -> dict[str, Any]:
        return {
            "self_regulation": self.self_regulation,
            "preferred_strategy": self.preferred_strategy.value,
            "reflection_ability": self.reflection_ability,
            **self.extra,
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "MetacognitiveDim":
        return cls(
            self_regulation=float(doc.get("self_regulation", 0.5)),
            preferred_strategy=StrategyPreference(doc.get("preferred_strategy", "unset")),
            reflection_ability=float(doc.get("reflection_ability", 0.5)),
            extra=_pop_extra(doc, ("self_regulation", "preferred_strategy", "reflection_ability")),
        )


@dataclass(frozen=True)
class ContextualDim:
    grade: int = 1
    subject_focus: tuple[str, ...] = ()
    learning_goal: str = ""
    extra: dict[str, Any] = field(default_factory=dict)

    def to_doc(self) -> dict[str, Any]:
        return {
            "grade": self.grade,
            "subject_focus": list(self.subject_focus),
            "learning_goal": self.learning_goal,
            **self.extra,
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "ContextualDim":
        return cls(
            grade=int(doc.get("grade", 1)),
            subject_focus=tuple(doc.get("subject_focus", [])),
            learning_goal=str(doc.get("learning_goal", "")),
            extra=_pop_extra(doc, ("grade", "subject_focus", "learning_goal")),
        )


@dataclass(frozen=True)
class LearnerProfile:
    student_id: str
    cognitive: CognitiveDim = field(default_factory=CognitiveDim)
    behavioral: BehavioralDim = field(default_factory=BehavioralDim)
    emotional: EmotionalDim = field(default_factory=EmotionalDim)
    metacognitive: MetacognitiveDim = field(default_factory=MetacognitiveDim)
    contextual: ContextualDim = field(default_factory=ContextualDim)
    updated_at: str = ""

    def to_doc(self) -> dict[str, Any]:
        return {
            "student_id": self.student_id,
            "cognitive": self.cognitive.to_doc(),
            "behavioral": self.behavioral.to_doc(),
            "emotional": self.emotional.to_doc(),
            "metacognitive": self.metacognitive.to_doc(),
            "contextual": self.contextual.to_doc(),
            "updated_at": self.updated_at,
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "LearnerProfile":
        return cls(
            student_id=str(doc["student_id"]),
            cognitive=CognitiveDim.from_doc(doc.get("cognitive", {})),
            behavioral=BehavioralDim.from_doc(doc.get("behavioral", {})),
            emotional=EmotionalDim.from_doc(doc.get("emotional", {})),
            metacognitive=MetacognitiveDim.from_doc(doc.get("metacognitive", {})),
            contextual=ContextualDim.from_doc(doc.get("contextual", {})),
            updated_at=str(doc.get("updated_at", "")),
        )

    def with_updated_at(self, stamp: str) -> "LearnerProfile":
        return replace(self, updated_at=stamp)


def iso_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def canonical_json(doc: Any) -> str:
    """Stable serialization used for equality checks and persistence."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def default_profile(
    student_id: str,
    grade: int,
    subjects: list[str] | tuple[str, ...],
    goal: str,
    now: str | None = None,
) -> LearnerProfile:
    """Fresh profile: neutral traits at 0.5, bloom at remember, counters at zero.

    Contextual fields come straight from the setup arguments. ``now`` pins the
    timestamp; equal inputs (including ``now``) give structurally equal profiles.
    """
    if not isinstance(grade, int) or not 1 <= grade <= 12:
        raise ValueError(f"grade must be an integer in 1..12, got {grade!r}")
    if not student_id:
        raise ValueError("student_id must be nonempty")
    return LearnerProfile(
        student_id=student_id,
        contextual=ContextualDim(grade=grade, subject_focus=tuple(subjects), learning_goal=goal),
        updated_at=now if now is not None else iso_now(),
    )
