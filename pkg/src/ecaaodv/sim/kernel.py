"""Priority event queue keyed on (time, insertion counter)."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Any


class SchedulePast(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class SimEvent:
    at: int
    seq: int
    kind: str
    payload: Any = None


class EventQueue:
    def __init__(self) -> None:
        self.now = 0
        self._heap: list[tuple[int, int, SimEvent]] = []
        self._seq = 0

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, at: int, kind: str, payload: Any = None) -> int:
        if at < self.now:
            raise SchedulePast(f"cannot schedule {kind} at {at}, clock is at {self.now}")
        seq = self._seq
        self._seq += 1
        heapq.heappush(self._heap, (at, seq, SimEvent(at, seq, kind, payload)))
        return seq

    def peek_time(self) -> int | None:
        return self._heap[0][0] if self._heap else None

    def pop(self) -> SimEvent:
        at, _, ev = heapq.heappop(self._heap)
        self.now = at
        return ev

    def pending(self) -> list[SimEvent]:
        return [ev for _, _, ev in sorted(self._heap)]
