"""Keyword-driven signal extraction and intent routing.

Everything in this module works on plain substring matching over
casefolded text. That is deliberate: the sensing layer has to be
cheap, deterministic, and auditable, so there is no model inference
here, only a dictionary of phrases and the rules for applying it.
"""

from __future__ import annotations

import json
import os
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

from .profile import BloomLevel, Mood, StrategyPreference

DICTIONARY_ENV_VAR = "STUDY_COMPANION_DICTIONARY"

# Order doubles as the tie-break between intent categories.
class IntentCategory(str, Enum):
    MATH = "math"
    CHINESE = "chinese"
    SCIENCE = "science"
    WRITING = "writing"
    READING = "reading"
    EMOTIONAL = "emotional"
    GENERAL = "general"


_CATEGORY_ORDER = tuple(IntentCategory)

# A message with no "?" still reads as a question when it opens with
# one of these. Checked against the casefolded, stripped text.
INTERROGATIVE_OPENERS = (
    "what",
    "why",
    "how",
    "when",
    "where",
    "who",
    "which",
    "can you",
    "could you",
    "do you",
    "is it",
    "are there",
)


def _normalize(text: str) -> str:
    return text.replace("’", "'").casefold()


def _require_phrase(phrase: str, where: str) -> None:
    if not phrase or not phrase.strip():
        raise ValueError(f"empty phrase in {where}")
    if phrase != _normalize(phrase):
        raise ValueError(
            f"phrase {phrase!r} in {where} must be lowercase with plain apostrophes"
        )


@dataclass(frozen=True)
class KeywordDictionary:
    """Validated phrase lists that drive extraction and routing.

    All phrases are lowercase; matching is substring containment over
    the casefolded message. Loaders should go through
    :func:`load_dictionary` rather than building instances by hand.
    """

    bloom_patterns: dict[str, BloomLevel]
    error_markers: tuple[str, ...]
    sentiment: dict[str, Mood]
    frustration_markers: tuple[str, ...]
    engagement_markers: tuple[str, ...]
    reflection_markers: tuple[str, ...]
    strategy_markers: dict[str, StrategyPreference]
    subject_keywords: dict[str, tuple[str, ...]]
    intent_keywords: dict[IntentCategory, tuple[str, ...]]

    def __post_init__(self) -> None:
        for phrase in self.bloom_patterns:
            _require_phrase(phrase, "bloom_patterns")
        for group, phrases in (
            ("error_markers", self.error_markers),
            ("frustration_markers", self.frustration_markers),
            ("engagement_markers", self.engagement_markers),
            ("reflection_markers", self.reflection_markers),
        ):
            for phrase in phrases:
                _require_phrase(phrase, group)
        seen_moods: dict[str, Mood] = {}
        for phrase, mood in self.sentiment.items():
            _require_phrase(phrase, "sentiment")
            if phrase in seen_moods and seen_moods[phrase] is not mood:
                raise ValueError(f"sentiment phrase {phrase!r} maps to two moods")
            seen_moods[phrase] = mood
        for phrase in self.strategy_markers:
            _require_phrase(phrase, "strategy_markers")
        for topic, phrases in self.subject_keywords.items():
            if not phrases:
                raise ValueError(f"subject {topic!r} has no keywords")
            for phrase in phrases:
                _require_phrase(phrase, f"subject_keywords[{topic}]")
        for category in IntentCategory:
            if category not in self.intent_keywords:
                raise ValueError(f"intent_keywords missing category {category.value}")
            for phrase in self.intent_keywords[category]:
                _require_phrase(phrase, f"intent_keywords[{category.value}]")

    @classmethod
    def from_doc(cls, doc: dict) -> "KeywordDictionary":
        return cls(
            bloom_patterns={
                phrase: BloomLevel.from_name(level)
                for phrase, level in doc["bloom_patterns"].items()
            },
            error_markers=tuple(doc["error_markers"]),
            sentiment={
                phrase: Mood(mood) for phrase, mood in doc["sentiment"].items()
            },
            frustration_markers=tuple(doc["frustration_markers"]),
            engagement_markers=tuple(doc["engagement_markers"]),
            reflection_markers=tuple(doc["reflection_markers"]),
            strategy_markers={
                phrase: StrategyPreference(pref)
                for phrase, pref in doc["strategy_markers"].items()
            },
            subject_keywords={
                topic: tuple(phrases)
                for topic, phrases in doc["subject_keywords"].items()
            },
            intent_keywords={
                IntentCategory(name): tuple(phrases)
                for name, phrases in doc["intent_keywords"].items()
            },
        )


@dataclass(frozen=True)
class SignalSet:
    """Everything the extractor noticed in one or more messages.

    ``mood_hits`` is a multiset because a later merge or update step
    needs to know how often each mood was evidenced, not just which
    one happened to match last.
    """

    bloom_hits: frozenset[BloomLevel] = frozenset()
    weak_topic_hits: frozenset[str] = frozenset()
    mood_hits: tuple[tuple[Mood, int], ...] = ()
    frustration_count: int = 0
    engagement_count: int = 0
    reflection_count: int = 0
    strategy_hit: StrategyPreference = StrategyPreference.UNSET
    question_count: int = 0

    def mood_counter(self) -> Counter:
        return Counter(dict(self.mood_hits))

    def merge(self, other: "SignalSet") -> "SignalSet":
        """Combine two signal sets; counts add, hits union.

        A guided strategy request wins over exploratory when both
        appear, so merging stays commutative.
        """
        merged_moods = self.mood_counter() + other.mood_counter()
        strategies = {self.strategy_hit, other.strategy_hit}
        if StrategyPreference.GUIDED in strategies:
            strategy = StrategyPreference.GUIDED
        elif StrategyPreference.EXPLORATORY in strategies:
            strategy = StrategyPreference.EXPLORATORY
        else:
            strategy = StrategyPreference.UNSET
        return SignalSet(
            bloom_hits=self.bloom_hits | other.bloom_hits,
            weak_topic_hits=self.weak_topic_hits | other.weak_topic_hits,
            mood_hits=_freeze_moods(merged_moods),
            frustration_count=self.frustration_count + other.frustration_count,
            engagement_count=self.engagement_count + other.engagement_count,
            reflection_count=self.reflection_count + other.reflection_count,
            strategy_hit=strategy,
            question_count=self.question_count + other.question_count,
        )


def _freeze_moods(counter: Counter) -> tuple[tuple[Mood, int], ...]:
    ordered = sorted(counter.items(), key=lambda item: list(Mood).index(item[0]))
    return tuple((mood, count) for mood, count in ordered if count > 0)


def route(message: str, dictionary: KeywordDictionary) -> IntentCategory:
    """Pick the intent category whose keywords match the message most.

    Each phrase counts once regardless of repetition. Ties fall to the
    earlier category in the declaration order; no match at all falls
    through to ``general``.
    """
    if not message or not message.strip():
        raise ValueError("cannot route an empty message")
    text = _normalize(message)
    best = IntentCategory.GENERAL
    best_count = 0
    for category in _CATEGORY_ORDER:
        count = sum(1 for phrase in dictionary.intent_keywords[category] if phrase in text)
        if count > best_count:
            best = category
            best_count = count
    return best


def extract_signals(message: str, dictionary: KeywordDictionary) -> SignalSet:
    """Scan one message for every signal the dictionary can evidence.

    A weak topic is only recorded when an error marker and one of that
    topic's keywords appear in the same message; a subject mention on
    its own is not a struggle. An empty message carries no signals.
    """
    if not message or not message.strip():
        return SignalSet()
    text = _normalize(message)

    bloom_hits = frozenset(
        level for phrase, level in dictionary.bloom_patterns.items() if phrase in text
    )

    has_error_marker = any(marker in text for marker in dictionary.error_markers)
    weak_topics = frozenset(
        topic
        for topic, phrases in dictionary.subject_keywords.items()
        if has_error_marker and any(phrase in text for phrase in phrases)
    )

    moods = Counter()
    for phrase, mood in dictionary.sentiment.items():
        if phrase in text:
            moods[mood] += 1

    frustration = sum(1 for marker in dictionary.frustration_markers if marker in text)
    engagement = sum(1 for marker in dictionary.engagement_markers if marker in text)
    reflection = sum(1 for marker in dictionary.reflection_markers if marker in text)

    strategy = StrategyPreference.UNSET
    matched = {pref for phrase, pref in dictionary.strategy_markers.items() if phrase in text}
    if StrategyPreference.GUIDED in matched:
        strategy = StrategyPreference.GUIDED
    elif StrategyPreference.EXPLORATORY in matched:
        strategy = StrategyPreference.EXPLORATORY

    stripped = text.strip()
    is_question = "?" in text or any(
        stripped.startswith(opener) for opener in INTERROGATIVE_OPENERS
    )

    return SignalSet(
        bloom_hits=bloom_hits,
        weak_topic_hits=weak_topics,
        mood_hits=_freeze_moods(moods),
        frustration_count=frustration,
        engagement_count=engagement,
        reflection_count=reflection,
        strategy_hit=strategy,
        question_count=1 if is_question else 0,
    )


def load_dictionary(path: str | Path | None = None) -> KeywordDictionary:
    """Load the bundled dictionary, or one named by path or env var.

    Resolution order: explicit ``path`` argument, then the
    ``STUDY_COMPANION_DICTIONARY`` environment variable, then the
    packaged English dictionary.
    """
    if path is None:
        env_path = os.environ.get(DICTIONARY_ENV_VAR)
        if env_path:
            path = env_path
    if path is not None:
        raw = Path(path).read_text(encoding="utf-8")
    else:
        raw = (
            resources.files("studycompanion") / "data" / "dictionary.en.json"
        ).read_text(encoding="utf-8")
    return KeywordDictionary.from_doc(json.loads(raw))
