"""Validity-gated repository of simulated mechanisms with top-k retrieval.

Only designs whose simulation succeeded are admitted; failed candidates are
rejected with a reason rather than an exception. Retrieval ranks entries by
their Chamfer score ascending (ties favour the most recent entry). Writes
are serialized behind a lock; readers always see a consistent snapshot.
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class MemoryEntry:
    mechanism_text: str  # canonical DSL form
    chamfer: float
    task_id: str
    iteration: int
    surrogate_text: str | None = None
    created_at: int = -1  # assigned by the repository on admission


@dataclass(frozen=True)
class StoreResult:
    stored: bool
    reason: str | None = None


class MemoryRepo:
    """In-process repository; pass ``path`` for an append-only JSONL store
    that survives across runs."""

    def __init__(self, path=None):
        self._lock = threading.Lock()
        self._entries: list[MemoryEntry] = []
        self._path = path
        if path is not None:
            try:
                with open(path) as fh:
                    for line in fh:
                        if line.strip():
                            d = json.loads(line)
                            self._entries.append(MemoryEntry(**d))
            except FileNotFoundError:
                pass

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def store(self, entry: MemoryEntry, sim) -> StoreResult:
        """Admit the entry iff its simulation satisfied the execution
        criterion. Duplicates are stored as new entries (dedup, if wanted,
        is a retrieval concern)."""
        if not sim.success:
            reason = "execution criterion not met (simulation failed"
            if sim.failure is not None:
                reason += f": {sim.failure.reason}"
            return StoreResult(False, reason + ")")
        if not (entry.chamfer >= 0.0) or entry.chamfer != entry.chamfer:
            return StoreResult(False, f"invalid chamfer score {entry.chamfer!r}")
        with self._lock:
            stamped = replace(entry, created_at=len(self._entries))
            self._entries.append(stamped)
            if self._path is not None:
                with open(self._path, "a") as fh:
                    fh.write(json.dumps(stamped.__dict__) + "\n")
        return StoreResult(True)

    def retrieve_topk(self, k: int, key=None) -> list[MemoryEntry]:
        """The k entries with the smallest distance, ascending; ties break
        toward the most recent. ``key`` may rescore entries against a new
        target (defaults to the stored chamfer)."""
        if k < 1:
            raise ValueError("k must be positive")
        if key is None:
            key = lambda e: e.chamfer
        with self._lock:
            snapshot = list(self._entries)
        ranked = sorted(snapshot, key=lambda e: (key(e), -e.created_at))
        return ranked[:k]

    def entries(self) -> list[MemoryEntry]:
        with self._lock:
            return list(self._entries)
