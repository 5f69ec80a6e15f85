"""Persistence: one profile row per student plus categorized memory records.

Two backends share one interface. The sqlite backend is the real one,
a single local file with two tables; the in-memory backend exists so
tests and ephemeral sessions need no filesystem. Dimension documents
are stored as JSON text, so adding a profile field never needs a
schema migration: missing keys default on load, unknown keys survive
the round trip.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .profile import LearnerProfile, canonical_json, iso_now


class StoreError(RuntimeError):
    """Storage failure, wrapped with enough context to locate the row."""


class MemoryCategory(str, Enum):
    STUDENT_PROFILE = "student_profile"
    LEARNING_PROGRESS = "learning_progress"
    SESSION_SUMMARY = "session_summary"
    SKILL_MEMORY = "skill_memory"


@dataclass(frozen=True)
class MemoryRecord:
    student_id: str
    category: MemoryCategory
    content: str
    created_at: str

    def __post_init__(self) -> None:
        if not self.content:
            raise ValueError("memory content must be nonempty")

    def to_doc(self) -> dict:
        return {
            "student_id": self.student_id,
            "category": self.category.value,
            "content": self.content,
            "created_at": self.created_at,
        }


class ProfileStore(ABC):
    """Interface both backends implement; single writer per student."""

    @abstractmethod
    def save_profile(self, profile: LearnerProfile) -> None: ...

    @abstractmethod
    def load_profile(self, student_id: str) -> LearnerProfile | None: ...

    @abstractmethod
    def append_memory(self, record: MemoryRecord) -> None: ...

    @abstractmethod
    def list_memories(
        self, student_id: str, category: MemoryCategory | None = None
    ) -> list[MemoryRecord]: ...

    @abstractmethod
    def list_students(self) -> list[str]: ...

    def close(self) -> None:
        pass


_DIMENSION_COLUMNS = ("cognitive", "behavioral", "emotional", "metacognitive", "contextual")


class SqliteStore(ProfileStore):
    def __init__(self, path: str | Path) -> None:
        self.path = str(path)
        try:
            self._conn = sqlite3.connect(self.path, check_same_thread=False)
        except sqlite3.Error as err:
            raise StoreError(f"cannot open store at {self.path}: {err}") from err
        self._lock = threading.Lock()
        with self._lock, self._conn:
            self._conn.execute(
                """CREATE TABLE IF NOT EXISTS learner_profile (
                    student_id TEXT PRIMARY KEY,
                    cognitive TEXT NOT NULL,
                    behavioral TEXT NOT NULL,
                    emotional TEXT NOT NULL,
                    metacognitive TEXT NOT NULL,
                    contextual TEXT NOT NULL,
                    updated_at TEXT NOT NULL
                )"""
            )
            self._conn.execute(
                """CREATE TABLE IF NOT EXISTS memories (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    student_id TEXT NOT NULL,
                    category TEXT NOT NULL,
                    content TEXT NOT NULL,
                    created_at TEXT NOT NULL
                )"""
            )
            self._conn.execute(
                "CREATE INDEX IF NOT EXISTS idx_memories_student"
                " ON memories (student_id, category)"
            )

    def save_profile(self, profile: LearnerProfile) -> None:
        doc = profile.to_doc()
        row = [doc["student_id"]]
        row.extend(canonical_json(doc[column]) for column in _DIMENSION_COLUMNS)
        row.append(doc["updated_at"])
        try:
            with self._lock, self._conn:
                self._conn.execute(
                    """INSERT INTO learner_profile
                       (student_id, cognitive, behavioral, emotional, metacognitive,
                        contextual, updated_at)
                       VALUES (?, ?, ?, ?, ?, ?, ?)
                       ON CONFLICT(student_id) DO UPDATE SET
                         cognitive=excluded.cognitive,
                         behavioral=excluded.behavioral,
                         emotional=excluded.emotional,
                         metacognitive=excluded.metacognitive,
                         contextual=excluded.contextual,
                         updated_at=excluded.updated_at""",
                    row,
                )
        except sqlite3.Error as err:
            raise StoreError(
                f"saving profile for {profile.student_id!r} failed: {err}"
            ) from err

    def load_profile(self, student_id: str) -> LearnerProfile | None:
        try:
            cursor = self._conn.execute(
                "SELECT cognitive, behavioral, emotional, metacognitive, contextual,"
                " updated_at FROM learner_profile WHERE student_id = ?",
                (student_id,),
            )
            found = cursor.fetchone()
        except sqlite3.Error as err:
            raise StoreError(f"loading profile for {student_id!r} failed: {err}") from err
        if found is None:
            return None
        doc = {"student_id": student_id, "updated_at": found[5]}
        for column, raw in zip(_DIMENSION_COLUMNS, found[:5]):
            doc[column] = json.loads(raw)
        return LearnerProfile.from_doc(doc)

    def append_memory(self, record: MemoryRecord) -> None:
        try:
            with self._lock, self._conn:
                self._conn.execute(
                    "INSERT INTO memories (student_id, category, content, created_at)"
                    " VALUES (?, ?, ?, ?)",
                    (record.student_id, record.category.value, record.content, record.created_at),
                )
        except sqlite3.Error as err:
            raise StoreError(
                f"appending {record.category.value} memory for {record.student_id!r}"
                f" failed: {err}"
            ) from err

    def list_memories(
        self, student_id: str, category: MemoryCategory | None = None
    ) -> list[MemoryRecord]:
        query = (
            "SELECT student_id, category, content, created_at FROM memories"
            " WHERE student_id = ?"
        )
        params: list = [student_id]
        if category is not None:
            query += " AND category = ?"
            params.append(category.value)
        query += " ORDER BY id DESC"
        try:
            rows = self._conn.execute(query, params).fetchall()
        except sqlite3.Error as err:
            raise StoreError(f"listing memories for {student_id!r} failed: {err}") from err
        return [
            MemoryRecord(
                student_id=row[0],
                category=MemoryCategory(row[1]),
                content=row[2],
                created_at=row[3],
            )
            for row in rows
        ]

    def list_students(self) -> list[str]:
        rows = self._conn.execute(
            "SELECT student_id FROM learner_profile ORDER BY student_id"
        ).fetchall()
        return [row[0] for row in rows]

    def close(self) -> None:
        self._conn.close()


class InMemoryStore(ProfileStore):
    def __init__(self) -> None:
        self._profiles: dict[str, str] = {}
        self._memories: list[MemoryRecord] = []
        self._lock = threading.Lock()

    def save_profile(self, profile: LearnerProfile) -> None:
        with self._lock:
            self._profiles[profile.student_id] = canonical_json(profile.to_doc())

    def load_profile(self, student_id: str) -> LearnerProfile | None:
        raw = self._profiles.get(student_id)
        if raw is None:
            return None
        return LearnerProfile.from_doc(json.loads(raw))

    def append_memory(self, record: MemoryRecord) -> None:
        with self._lock:
            self._memories.append(record)

    def list_memories(
        self, student_id: str, category: MemoryCategory | None = None
    ) -> list[MemoryRecord]:
        matches = [
            record
            for record in self._memories
            if record.student_id == student_id
            and (category is None or record.category is category)
        ]
        return list(reversed(matches))

    def list_students(self) -> list[str]:
        return sorted(self._profiles)


def summary_record(student_id: str, content: str, now: str | None = None) -> MemoryRecord:
    """Convenience constructor for end-of-session summaries."""
    return MemoryRecord(
        student_id=student_id,
        category=MemoryCategory.SESSION_SUMMARY,
        content=content,
        created_at=now if now is not None else iso_now(),
    )
