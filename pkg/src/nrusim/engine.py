"""Deterministic discrete-event loop with a microsecond clock.

One loop per run, single-threaded.  Events pop in nondecreasing timestamp
order with ties broken by insertion sequence, and scheduling into the
past aborts the run rather than silently corrupting it.  Randomness never
lives here: actors derive named substreams from the scenario seed so a
stream's draws do not depend on unrelated activity.
"""

from __future__ import annotations

import hashlib
import heapq
import itertools
import json
from random import Random
from typing import Any, Callable

from .errors import InvariantBreach


def derive_rng(seed: int, label: str) -> Random:
    """Independent generator for (seed, label), stable across processes."""
    digest = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    return Random(int.from_bytes(digest[:8], "big"))


class EventLog:
    """Append-only record list; one JSON object per record when exported."""

    def __init__(self):
        self.records: list[dict[str, Any]] = []

    def append(self, t_us: int, actor: str, action: str, **fields: Any) -> None:
        record = {"t_us": t_us, "actor": actor, "action": action}
        record.update(fields)
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def select(self, action: str) -> list[dict[str, Any]]:
        return [r for r in self.records if r["action"] == action]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)


class EventLoop:
    def __init__(self):
        self.now_us = 0
        self._heap: list[tuple[int, int, Callable[[], None]]] = []
        self._seq = itertools.count()

    def schedule_at(self, at_us: int, fn: Callable[[], None]) -> None:
        if at_us < self.now_us:
            raise InvariantBreach(f"event scheduled at {at_us} us, before now ({self.now_us} us)")
        heapq.heappush(self._heap, (at_us, next(self._seq), fn))

    def schedule_after(self, delay_us: int, fn: Callable[[], None]) -> None:
        self.schedule_at(self.now_us + delay_us, fn)

    def run(self) -> None:
        """Execute until no events remain."""
        while self._heap:
            at_us, _seq, fn = heapq.heappop(self._heap)
            self.now_us = at_us
            fn()

    @property
    def pending(self) -> int:
        return len(self._heap)
