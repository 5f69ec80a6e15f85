"""Session orchestration: the per-turn pipeline, setup wizard, and replay.

One turn runs exactly this pipeline: load the profile, route the
message, fold the session's unconsumed user messages into the profile,
persist it, generate the strategy, compose the system prompt, and only
then call the model. The profile write deliberately precedes the model
call: a failed completion still keeps the learning signals.

Timestamps come from an injectable clock so that replaying a recorded
transcript against the mock provider is byte-for-byte reproducible.
"""

from __future__ import annotations

import json
import os
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Sequence

from .gateway import ChatMessage, ProviderConfig, chat_complete, load_providers
from .mockserver import MockLLMServer
from .profile import LearnerProfile, canonical_json, default_profile, iso_now
from .prompts import PromptAssembler, PromptBundle
from .report import DEFAULT_SESSION_SATURATION
from .signals import IntentCategory, KeywordDictionary, load_dictionary, route
from .store import (
    InMemoryStore,
    MemoryCategory,
    MemoryRecord,
    ProfileStore,
    SqliteStore,
)
from .strategy import StrategyBlock, StrategyRule, generate_strategy, load_rules
from .updater import (
    DeltaEntry,
    UpdatePolicy,
    begin_session,
    update_profile_from_interaction,
)

CONFIG_ENV_VAR = "STUDY_COMPANION_CONFIG"
DEFAULT_CONFIG_DIR = "~/.studycompanion"

# Fallback context for students created through the API rather than the
# wizard; their real grade can be set later through the wizard or store.
FALLBACK_GRADE = 6


class EngineError(RuntimeError):
    pass


class UnknownSessionError(EngineError):
    pass


@dataclass
class EngineConfig:
    provider: str = "mock"
    style: str = "warm"
    detail: str = "concise"
    student_id: str = ""
    student_name: str = ""
    grade: int = FALLBACK_GRADE
    subjects: tuple[str, ...] = ()
    goal: str = ""
    store_path: str = f"{DEFAULT_CONFIG_DIR}/companion.db"
    dictionary_path: str | None = None
    templates_dir: str | None = None
    policy: UpdatePolicy = field(default_factory=UpdatePolicy)
    session_saturation: int = DEFAULT_SESSION_SATURATION
    provider_overrides: dict[str, dict] = field(default_factory=dict)

    def to_doc(self) -> dict[str, Any]:
        return {
            "provider": self.provider,
            "style": self.style,
            "detail": self.detail,
            "student_id": self.student_id,
            "student_name": self.student_name,
            "grade": self.grade,
            "subjects": list(self.subjects),
            "goal": self.goal,
            "store_path": self.store_path,
            "dictionary_path": self.dictionary_path,
            "templates_dir": self.templates_dir,
            "policy": {
                "efficacy_step": self.policy.efficacy_step,
                "motivation_step": self.policy.motivation_step,
                "reflection_step": self.policy.reflection_step,
                "kt_step": self.policy.kt_step,
            },
            "session_saturation": self.session_saturation,
            "provider_overrides": dict(self.provider_overrides),
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "EngineConfig":
        policy_doc = doc.get("policy", {})
        return cls(
            provider=doc.get("provider", "mock"),
            style=doc.get("style", "warm"),
            detail=doc.get("detail", "concise"),
            student_id=doc.get("student_id", ""),
            student_name=doc.get("student_name", ""),
            grade=int(doc.get("grade", FALLBACK_GRADE)),
            subjects=tuple(doc.get("subjects", [])),
            goal=doc.get("goal", ""),
            store_path=doc.get("store_path", f"{DEFAULT_CONFIG_DIR}/companion.db"),
            dictionary_path=doc.get("dictionary_path"),
            templates_dir=doc.get("templates_dir"),
            policy=UpdatePolicy(
                efficacy_step=policy_doc.get("efficacy_step", 0.1),
                motivation_step=policy_doc.get("motivation_step", 0.1),
                reflection_step=policy_doc.get("reflection_step", 0.05),
                kt_step=policy_doc.get("kt_step", 0.1),
            ),
            session_saturation=int(doc.get("session_saturation", DEFAULT_SESSION_SATURATION)),
            provider_overrides=dict(doc.get("provider_overrides", {})),
        )


def default_config_path() -> Path:
    override = os.environ.get(CONFIG_ENV_VAR)
    if override:
        return Path(override)
    return Path(DEFAULT_CONFIG_DIR).expanduser() / "config.json"


def save_config(config: EngineConfig, path: str | Path | None = None) -> Path:
    target = Path(path) if path is not None else default_config_path()
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(config.to_doc(), indent=2) + "\n", encoding="utf-8")
    return target


def load_config(path: str | Path | None = None) -> EngineConfig | None:
    target = Path(path) if path is not None else default_config_path()
    if not target.exists():
        return None
    return EngineConfig.from_doc(json.loads(target.read_text(encoding="utf-8")))


@dataclass(frozen=True)
class WizardAnswers:
    provider: str
    style: str
    detail: str
    student_name: str
    grade: int
    subjects: tuple[str, ...]
    goal: str = ""
    student_id: str = ""


def run_setup_wizard(
    answers: WizardAnswers,
    providers: dict[str, ProviderConfig] | None = None,
    now: str | None = None,
) -> tuple[EngineConfig, LearnerProfile]:
    """Validate the four wizard steps and produce config plus fresh profile.

    Contextual profile fields (grade, subjects, goal) migrate straight
    from the student-info step. Raises ValueError naming the bad step
    so an interactive caller can re-prompt just that step.
    """
    providers = providers if providers is not None else load_providers()
    if answers.provider not in providers:
        raise ValueError(
            f"step 1 (provider): unknown provider {answers.provider!r};"
            f" choose from {', '.join(sorted(providers))}"
        )
    if answers.style not in ("warm", "direct"):
        raise ValueError("step 2 (teaching style): choose 'warm' or 'direct'")
    if answers.detail not in ("concise", "thorough"):
        raise ValueError("step 3 (detail level): choose 'concise' or 'thorough'")
    if not answers.student_name.strip():
        raise ValueError("step 4 (student info): name must be nonempty")
    if not isinstance(answers.grade, int) or not 1 <= answers.grade <= 12:
        raise ValueError(
            f"step 4 (student info): grade must be an integer in 1..12, got {answers.grade!r}"
        )
    student_id = answers.student_id or answers.student_name.strip().casefold().replace(" ", "-")
    config = EngineConfig(
        provider=answers.provider,
        style=answers.style,
        detail=answers.detail,
        student_id=student_id,
        student_name=answers.student_name.strip(),
        grade=answers.grade,
        subjects=tuple(answers.subjects),
        goal=answers.goal,
    )
    profile = default_profile(
        student_id, answers.grade, list(answers.subjects), answers.goal, now=now
    )
    return config, profile


@dataclass
class SessionState:
    session_id: str
    student_id: str
    provider: str
    started_at: str
    active_subject: IntentCategory = IntentCategory.GENERAL
    history: list[ChatMessage] = field(default_factory=list)
    consumed_user_messages: int = 0
    turns: int = 0
    subjects_visited: list[str] = field(default_factory=list)
    last_prompt: PromptBundle | None = None
    closed: bool = False

    def user_messages(self) -> list[str]:
        return [message.content for message in self.history if message.role == "user"]


@dataclass(frozen=True)
class TurnResult:
    reply: str
    category: IntentCategory
    delta: tuple[DeltaEntry, ...]
    strategy: StrategyBlock
    prompt: PromptBundle

    def to_doc(self) -> dict[str, Any]:
        return {
            "reply": self.reply,
            "category": self.category.value,
            "delta": [entry.to_doc() for entry in self.delta],
            "strategy": self.strategy.to_doc(),
            "prompt": self.prompt.system_prompt,
        }


class Engine:
    """Holds the loaded companion parts and runs sessions over one store."""

    def __init__(
        self,
        config: EngineConfig,
        store: ProfileStore,
        dictionary: KeywordDictionary,
        assembler: PromptAssembler,
        rules: tuple[StrategyRule, ...],
        providers: dict[str, ProviderConfig],
        chat_fn: Callable[..., ChatMessage] = chat_complete,
        clock: Callable[[], str] = iso_now,
    ) -> None:
        if config.provider not in providers:
            raise EngineError(f"configured provider {config.provider!r} is not defined")
        self.config = config
        self.store = store
        self.dictionary = dictionary
        self.assembler = assembler
        self.rules = rules
        self.providers = providers
        self.chat_fn = chat_fn
        self.clock = clock
        self.sessions: dict[str, SessionState] = {}

    @classmethod
    def from_config(
        cls,
        config: EngineConfig,
        store: ProfileStore | None = None,
        chat_fn: Callable[..., ChatMessage] = chat_complete,
        clock: Callable[[], str] = iso_now,
    ) -> "Engine":
        if store is None:
            path = Path(config.store_path).expanduser()
            path.parent.mkdir(parents=True, exist_ok=True)
            store = SqliteStore(path)
        providers = load_providers()
        for name, override in config.provider_overrides.items():
            base = providers.get(name)
            merged = {
                "base_url": override.get("base_url", base.base_url if base else ""),
                "model": override.get("model", base.model if base else "unknown"),
                "api_key_env": override.get(
                    "api_key_env", base.api_key_env if base else None
                ),
                "timeout": override.get("timeout", base.timeout if base else 30.0),
                "max_retries": override.get("max_retries", base.max_retries if base else 2),
                "backoff_base": override.get(
                    "backoff_base", base.backoff_base if base else 0.5
                ),
            }
            providers[name] = ProviderConfig(name=name, **merged)
        return cls(
            config=config,
            store=store,
            dictionary=load_dictionary(config.dictionary_path),
            assembler=PromptAssembler(
                templates_dir=config.templates_dir,
                style=config.style,
                detail=config.detail,
            ),
            rules=load_rules(),
            providers=providers,
            chat_fn=chat_fn,
            clock=clock,
        )

    @property
    def provider_config(self) -> ProviderConfig:
        return self.providers[self.config.provider]

    def _default_profile_for(self, student_id: str) -> LearnerProfile:
        if student_id == self.config.student_id and self.config.student_id:
            return default_profile(
                student_id,
                self.config.grade,
                list(self.config.subjects),
                self.config.goal,
                now=self.clock(),
            )
        return default_profile(student_id, FALLBACK_GRADE, [], "", now=self.clock())

    def open_session(self, student_id: str) -> SessionState:
        """Load or create the profile, bump its session counter, start state."""
        if not student_id or not student_id.strip():
            raise ValueError("student_id must be nonempty")
        profile = self.store.load_profile(student_id)
        if profile is None:
            profile = self._default_profile_for(student_id)
        profile = begin_session(profile).with_updated_at(self.clock())
        self.store.save_profile(profile)
        session = SessionState(
            session_id=uuid.uuid4().hex,
            student_id=student_id,
            provider=self.config.provider,
            started_at=self.clock(),
        )
        self.sessions[session.session_id] = session
        return session

    def get_session(self, session_id: str) -> SessionState:
        session = self.sessions.get(session_id)
        if session is None or session.closed:
            raise UnknownSessionError(f"no open session {session_id!r}")
        return session

    def handle_turn(self, session: SessionState, user_text: str) -> TurnResult:
        """Run the full pipeline for one student message."""
        if session.closed:
            raise UnknownSessionError(f"session {session.session_id!r} is closed")
        if not user_text or not user_text.strip():
            raise ValueError("user message must be nonempty")

        profile = self.store.load_profile(session.student_id)
        if profile is None:
            raise EngineError(f"profile for {session.student_id!r} disappeared")

        category = route(user_text, self.dictionary)
        if category is not session.active_subject:
            session.active_subject = category
        if not session.subjects_visited or session.subjects_visited[-1] != category.value:
            session.subjects_visited.append(category.value)

        session.history.append(ChatMessage(role="user", content=user_text))
        pending = session.user_messages()[session.consumed_user_messages :]
        updated, delta = update_profile_from_interaction(
            profile, pending, self.dictionary, self.config.policy
        )
        session.consumed_user_messages = len(session.user_messages())
        updated = updated.with_updated_at(self.clock())
        self.store.save_profile(updated)

        strategy = generate_strategy(updated, self.rules)
        bundle = self.assembler.compose(category, updated, strategy)
        session.last_prompt = bundle

        messages = [ChatMessage(role="system", content=bundle.system_prompt)]
        messages.extend(session.history)
        reply = self.chat_fn(self.provider_config, messages)

        session.history.append(reply)
        session.turns += 1
        return TurnResult(
            reply=reply.content,
            category=category,
            delta=tuple(delta),
            strategy=strategy,
            prompt=bundle,
        )

    def record_tool_use(self, session: SessionState, tool_name: str) -> None:
        """Bump the profile's tool_usage counter for one dispatched tool."""
        profile = self.store.load_profile(session.student_id)
        if profile is None:
            raise EngineError(f"profile for {session.student_id!r} disappeared")
        usage = dict(profile.behavioral.tool_usage)
        usage[tool_name] = usage.get(tool_name, 0) + 1
        profile = replace(
            profile, behavioral=replace(profile.behavioral, tool_usage=usage)
        ).with_updated_at(self.clock())
        self.store.save_profile(profile)

    def close_session(self, session: SessionState) -> MemoryRecord:
        """Write exactly one session summary and mark the session closed."""
        if session.closed:
            raise EngineError(f"session {session.session_id!r} already closed")
        session.closed = True
        profile = self.store.load_profile(session.student_id)
        mood = profile.emotional.current_mood.value if profile else "unknown"
        efficacy = profile.emotional.self_efficacy if profile else 0.0
        subjects = ", ".join(session.subjects_visited) or "none"
        record = MemoryRecord(
            student_id=session.student_id,
            category=MemoryCategory.SESSION_SUMMARY,
            content=(
                f"session {session.session_id}: {session.turns} student turns;"
                f" subjects: {subjects}; final mood: {mood};"
                f" self-efficacy: {efficacy:.2f}"
            ),
            created_at=self.clock(),
        )
        self.store.append_memory(record)
        return record


def _deep_merge(base: dict, overlay: dict) -> dict:
    merged = dict(base)
    for key, value in overlay.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _lookup_path(doc: dict, path: str) -> Any:
    node: Any = doc
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            return None
        node = node[part]
    return node


def seed_profile_from_fixture(doc: dict[str, Any], now: str) -> LearnerProfile:
    student = doc["student"]
    profile = default_profile(
        student["student_id"],
        int(student["grade"]),
        list(student.get("subjects", [])),
        student.get("goal", ""),
        now=now,
    )
    seed = doc.get("seed")
    if seed:
        merged = _deep_merge(profile.to_doc(), seed)
        profile = LearnerProfile.from_doc(merged)
    return profile


def check_turn_expectations(
    expect: dict[str, Any], result: TurnResult, profile: LearnerProfile
) -> list[str]:
    """Compare one turn's outcome against its fixture expectations.

    Returns human-readable mismatch descriptions; empty means the turn
    behaved exactly as scripted.
    """
    failures: list[str] = []
    doc = profile.to_doc()

    if "category" in expect and result.category.value != expect["category"]:
        failures.append(
            f"routed to {result.category.value!r}, expected {expect['category']!r}"
        )
    triples = [[entry.path, entry.old, entry.new] for entry in result.delta]
    for wanted in expect.get("delta_contains", []):
        if list(wanted) not in triples:
            failures.append(f"delta missing {wanted!r}; got {triples!r}")
    for path, value in expect.get("profile", {}).items():
        actual = _lookup_path(doc, path)
        if actual != value:
            failures.append(f"profile {path} is {actual!r}, expected {value!r}")
    for topic in expect.get("weak_topics_contains", []):
        if topic not in doc["cognitive"]["weak_topics"]:
            failures.append(
                f"weak topics {doc['cognitive']['weak_topics']!r} missing {topic!r}"
            )
    for rule_id in expect.get("fired_contains", []):
        if rule_id not in result.strategy.fired:
            failures.append(f"fired {result.strategy.fired!r} missing {rule_id}")
    for rule_id in expect.get("fired_not_contains", []):
        if rule_id in result.strategy.fired:
            failures.append(f"fired {result.strategy.fired!r} must not contain {rule_id}")
    if "frustration_hits" in expect:
        hits = sum(
            entry.new - entry.old
            for entry in result.delta
            if entry.path == "emotional.frustration_count"
        )
        if hits != expect["frustration_hits"]:
            failures.append(
                f"frustration hits {hits}, expected {expect['frustration_hits']}"
            )
    for needle in expect.get("prompt_contains", []):
        if needle not in result.prompt.system_prompt:
            failures.append(f"prompt missing {needle!r}")
    for needle in expect.get("reply_contains", []):
        if needle not in result.reply:
            failures.append(f"reply missing {needle!r}")
    return failures


@dataclass(frozen=True)
class ReplayResult:
    fixture_name: str
    turn_docs: tuple[dict, ...]
    failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.failures

    def transcript_digest(self) -> str:
        """Canonical serialization of everything determinism must cover."""
        return canonical_json(list(self.turn_docs))


def load_fixture(path: str | Path) -> dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def bundled_fixture_path(name: str) -> Path:
    from importlib import resources

    return Path(str(resources.files("studycompanion") / "data" / "fixtures" / f"{name}.json"))


def replay_fixture(doc: dict[str, Any]) -> ReplayResult:
    """Run a scripted transcript against the mock provider and check it.

    Everything is pinned: in-memory store, fixed clock, scripted
    replies. Two replays of the same fixture produce byte-identical
    transcript digests.
    """
    clock_value = doc.get("clock", "2026-01-01T00:00:00+00:00")
    scripted = [(item["pattern"], item["reply"]) for item in doc.get("script", [])]
    store = InMemoryStore()
    with MockLLMServer(scripted=scripted) as server:
        config = EngineConfig(
            provider="mock",
            student_id=doc["student"]["student_id"],
            student_name=doc["student"].get("name", doc["student"]["student_id"]),
            grade=int(doc["student"]["grade"]),
            subjects=tuple(doc["student"].get("subjects", [])),
            goal=doc["student"].get("goal", ""),
            provider_overrides={"mock": {"base_url": server.base_url}},
        )
        engine = Engine.from_config(config, store=store, clock=lambda: clock_value)
        profile = seed_profile_from_fixture(doc, now=clock_value)
        store.save_profile(profile)

        session = engine.open_session(profile.student_id)
        failures: list[str] = []
        turn_docs: list[dict] = []
        for index, turn in enumerate(doc["turns"]):
            result = engine.handle_turn(session, turn["text"])
            current = store.load_profile(profile.student_id)
            turn_docs.append(result.to_doc())
            for failure in check_turn_expectations(turn.get("expect", {}), result, current):
                failures.append(f"turn {index + 1}: {failure}")
        engine.close_session(session)
    return ReplayResult(
        fixture_name=doc.get("name", "unnamed"),
        turn_docs=tuple(turn_docs),
        failures=tuple(failures),
    )
