"""Learner-profiled study companion engine.

The package follows a three-stage turn pipeline: extract signals from the
student's message, fold them into a five-dimension learner profile, then
compose an adaptive system prompt (pedagogical template + profile summary +
strategy block) for a provider-agnostic chat-completion call.
"""

from .profile import (
    BloomLevel,
    Mood,
    StrategyPreference,
    CognitiveDim,
    BehavioralDim,
    EmotionalDim,
    MetacognitiveDim,
    ContextualDim,
    LearnerProfile,
    default_profile,
    adjust_trait,
)
from .signals import IntentCategory, KeywordDictionary, SignalSet, route, extract_signals, load_dictionary
from .updater import UpdatePolicy, DeltaEntry, update_profile_from_interaction, begin_session, apply_delta
from .strategy import StrategyBlock, StrategyRule, generate_strategy
from .prompts import PromptAssembler, PromptBundle, render_learner_summary, compose_system_prompt
from .report import AssessmentReport, assess_profile, EQUAL_WEIGHTS
from .store import MemoryCategory, MemoryRecord, ProfileStore, SqliteStore, InMemoryStore
from .calculator import eval_expression, CalculatorSyntaxError, CalculatorDomainError
from .tools import ToolRegistry, ToolSpec, ToolError, lookup_knowledge, default_registry
from .gateway import ProviderConfig, ChatMessage, chat_complete, load_providers
from .engine import Engine, EngineConfig, SessionState, WizardAnswers, run_setup_wizard

__version__ = "0.1.0"
