"""Ubiquitous-museum demo: visitor context changes driven through ECA rules.

Each timed delta updates a :class:`MuseumContext`, becomes an External
event carrying the changed fields, and is run through the rule engine with
probes bound to the updated context.  Route-giving decisions are answered
with a breadth-first shortest path over a small floor graph.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from datetime import timedelta
from typing import Any, Iterable, Mapping

from ..eca import EXTERNAL, Classifier, DataType, EvalContext, Occurrence, RuleRegistry, classify_event, process_event
from ..resources import read_data
from .rulefile import RuleHost, parse_rules

ROUTE_DECISIONS = frozenset({"ProvideRoute", "ProvideShortestRoute"})

MUSEUM_HOST = RuleHost(
    actions=frozenset({"ProvideRoute", "ProvideShortestRoute", "SwitchOnAC", "ProvideExhibitDetails"}),
    probes=frozenset({
        "interest", "preference", "clock", "temperature", "bp_systolic", "bp_diastolic",
        "dwell_time_s", "user_history", "location",
    }),
)

MUSEUM_CLASSIFIER = Classifier(
    {"context_delta": EXTERNAL},
    {
        "event_id": DataType.GUID,
        "changed": DataType.TEXT,
        "location": DataType.TEXT,
    },
)

HISTORY = ("new", "returning")


@dataclass(frozen=True)
class MuseumContext:
    interest: str = ""
    preference: str = ""
    clock: timedelta = timedelta(hours=9)  # time of day
    temperature: float = 24.0  # degrees C
    blood_pressure: tuple[int, int] = (120, 80)  # systolic, diastolic
    dwell_time_s: int = 0
    user_history: str = "new"
    location: str = "entrance"

    def __post_init__(self) -> None:
        if not math.isfinite(self.temperature):
            raise ValueError("temperature must be finite")
        if min(self.blood_pressure) <= 0:
            raise ValueError("blood pressure components must be positive")
        if self.user_history not in HISTORY:
            raise ValueError(f"user_history must be one of {HISTORY}")
        if self.dwell_time_s < 0:
            raise ValueError("dwell_time_s must be non-negative")
        if not timedelta(0) <= self.clock < timedelta(days=1):
            raise ValueError("clock is a time of day")

    def probes(self) -> dict[str, Any]:
        return {
            "interest": lambda: self.interest,
            "preference": lambda: self.preference,
            "clock": lambda: self.clock,
            "temperature": lambda: self.temperature,
            "bp_systolic": lambda: self.blood_pressure[0],
            "bp_diastolic": lambda: self.blood_pressure[1],
            "dwell_time_s": lambda: self.dwell_time_s,
            "user_history": lambda: self.user_history,
            "location": lambda: self.location,
        }


@dataclass(frozen=True)
class ContextDelta:
    at: int  # ms
    changes: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class LogEntry:
    at: int
    rule_id: str
    decision: str
    args: tuple[tuple[str, Any], ...]
    route: tuple[str, ...] | None = None

    def line(self) -> str:
        args = ",".join(f"{k}={v}" for k, v in self.args)
        out = f"t={self.at} rule={self.rule_id} decision={self.decision} args={args or '-'}"
        if self.route is not None:
            out += " route=" + (">".join(self.route) if self.route else "unreachable")
        return out


def parse_time_of_day(text: str) -> timedelta:
    hh, sep, mm = text.partition(":")
    if not sep:
        raise ValueError(f"expected HH:MM, got {text!r}")
    h, m = int(hh), int(mm)
    if not (0 <= h < 24 and 0 <= m < 60):
        raise ValueError(f"bad time of day {text!r}")
    return timedelta(hours=h, minutes=m)


_FIELD_PARSERS = {
    "interest": str,
    "preference": str,
    "clock": parse_time_of_day,
    "temperature": float,
    "bp": lambda s: tuple(int(p) for p in s.split("/", 1)),
    "dwell_time_s": int,
    "user_history": str,
    "location": str,
}


def parse_stream(text: str) -> list[ContextDelta]:
    """``<ms> key=value ...`` per line, ``#`` comments."""
    out = []
    last = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *pairs = line.split()
        try:
            at = int(head)
            changes: dict[str, Any] = {}
            for p in pairs:
                k, sep, v = p.partition("=")
                if not sep or k not in _FIELD_PARSERS:
                    raise ValueError(f"bad field {p!r}")
                changes["blood_pressure" if k == "bp" else k] = _FIELD_PARSERS[k](v)
        except ValueError as exc:
            raise ValueError(f"stream line {lineno}: {exc}") from None
        if at < last:
            raise ValueError(f"stream line {lineno}: time goes backwards")
        last = at
        out.append(ContextDelta(at, changes))
    return out


def load_floor(text: str) -> dict[str, list[str]]:
    graph: dict[str, list[str]] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        if len(line) != 2:
            raise ValueError(f"floor edge needs two rooms: {raw!r}")
        a, b = line
        graph.setdefault(a, []).append(b)
        graph.setdefault(b, []).append(a)
    for nbrs in graph.values():
        nbrs.sort()
    return graph


def shortest_path(graph: Mapping[str, list[str]], start: str, goal: str) -> tuple[str, ...]:
    """Fewest-corridor path (BFS, ties by room name); empty if unreachable."""
    if start not in graph or goal not in graph:
        return ()
    prev: dict[str, str | None] = {start: None}
    q = deque([start])
    while q:
        room = q.popleft()
        if room == goal:
            path = []
            cur: str | None = room
            while cur is not None:
                path.append(cur)
                cur = prev[cur]
            return tuple(reversed(path))
        for nb in graph[room]:
            if nb not in prev:
                prev[nb] = room
                q.append(nb)
    return ()


def load_museum_rules(text: str | None = None) -> RuleRegistry:
    return parse_rules(read_data("museum.rules") if text is None else text, MUSEUM_HOST)


def default_floor() -> dict[str, list[str]]:
    return load_floor(read_data("museum_floor.txt"))


def default_stream() -> list[ContextDelta]:
    return parse_stream(read_data("museum_stream.txt"))


def museum_demo(
    stream: Iterable[ContextDelta],
    registry: RuleRegistry,
    floor: Mapping[str, list[str]] | None = None,
    initial: MuseumContext | None = None,
) -> list[LogEntry]:
    floor = default_floor() if floor is None else floor
    ctx = initial or MuseumContext()
    log: list[LogEntry] = []
    for n, delta in enumerate(stream, start=1):
        ctx = replace(ctx, **delta.changes)
        occ = Occurrence(
            "context_delta",
            {"event_id": n, "changed": ",".join(sorted(delta.changes)) or "-", "location": ctx.location},
            delta.at,
            "visitor",
            n,
        )
        event = classify_event(occ, MUSEUM_CLASSIFIER)
        for d in process_event(event, registry, EvalContext(ctx.probes())):
            route = None
            if d.name in ROUTE_DECISIONS:
                route = shortest_path(floor, d.arg("start", ctx.location), d.arg("target"))
            log.append(LogEntry(delta.at, d.rule_id, d.name, d.args, route))
    return log


def fired_rules(log: Iterable[LogEntry]) -> dict[int, set[str]]:
    out: dict[int, set[str]] = {}
    for e in log:
        out.setdefault(e.at, set()).add(e.rule_id)
    return out
