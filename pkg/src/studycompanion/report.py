"""Per-dimension assessment scores and the weighted overall score.

The scoring formulas are implementation-defined heuristics, not
measurements: they compress each profile dimension into a 0..1 number
so reports and dashboards have something comparable to show. Treat
them as a summary of the profile, not as an evaluation of the learner.
"""

from __future__ import annotations

from dataclasses import dataclass

from .profile import LearnerProfile, iso_now

DIMENSIONS = ("cognitive", "behavioral", "emotional", "metacognitive", "contextual")

EQUAL_WEIGHTS = {name: 0.2 for name in DIMENSIONS}

# Sessions at which the behavioral score saturates at 1.0.
DEFAULT_SESSION_SATURATION = 20

_WEIGHT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class AssessmentReport:
    per_dimension: dict[str, float]
    weights: dict[str, float]
    overall: float
    generated_at: str

    def to_doc(self) -> dict:
        return {
            "per_dimension": dict(self.per_dimension),
            "weights": dict(self.weights),
            "overall": self.overall,
            "generated_at": self.generated_at,
        }


def _validate_weights(weights: dict[str, float]) -> None:
    if set(weights) != set(DIMENSIONS):
        raise ValueError(f"weights must cover exactly the dimensions {DIMENSIONS}")
    if any(w < 0 for w in weights.values()):
        raise ValueError("weights must be nonnegative")
    total = sum(weights.values())
    if abs(total - 1.0) > _WEIGHT_TOLERANCE:
        raise ValueError(f"weights must sum to 1, got {total!r}")


def assess_profile(
    profile: LearnerProfile,
    weights: dict[str, float] | None = None,
    session_saturation: int = DEFAULT_SESSION_SATURATION,
    now: str | None = None,
) -> AssessmentReport:
    """Score each dimension on 0..1 and combine them by the given weights.

    Cognitive averages topic mastery (vacuously 1.0 with no tracked
    topics) with the Bloom level normalized so remember maps to 0 and
    create to 1. Emotional and metacognitive are plain trait means.
    Behavioral saturates with session count. Contextual only checks
    that the setup fields are filled in.
    """
    weights = dict(weights) if weights is not None else dict(EQUAL_WEIGHTS)
    _validate_weights(weights)

    tracing = profile.cognitive.knowledge_tracing
    kt_mean = sum(tracing.values()) / len(tracing) if tracing else 1.0
    bloom_norm = (int(profile.cognitive.bloom_level) - 1) / 5
    scores = {
        "cognitive": (kt_mean + bloom_norm) / 2,
        "behavioral": min(1.0, profile.behavioral.session_count / session_saturation),
        "emotional": (profile.emotional.self_efficacy + profile.emotional.motivation) / 2,
        "metacognitive": (
            profile.metacognitive.self_regulation + profile.metacognitive.reflection_ability
        )
        / 2,
        "contextual": 1.0 if profile.contextual.grade and profile.contextual.learning_goal else 0.5,
    }
    scores = {name: round(score, 9) for name, score in scores.items()}
    overall = round(sum(weights[name] * scores[name] for name in DIMENSIONS), 9)
    return AssessmentReport(
        per_dimension=scores,
        weights=weights,
        overall=overall,
        generated_at=now if now is not None else iso_now(),
    )
