"""Byte-stable trace records.

One record per line: ``t=<ms> node=<ip> ev=<tag> k=v ...``.  Integers are
written as-is, booleans as 0/1, floats with three decimals, ``None`` as
``-``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

# per-run bookkeeping of the rule engine; kept out of the protocol digest
ENGINE_TAGS = frozenset({"ECA_FIRE"})


class MalformedTrace(ValueError):
    def __init__(self, line: int, reason: str) -> None:
        super().__init__(f"trace line {line}: {reason}")
        self.line = line


def fmt(value: object) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.3f}"
    text = str(value)
    if not text or any(c.isspace() for c in text):
        raise ValueError(f"trace value {value!r} is empty or contains whitespace")
    return text


@dataclass(frozen=True, slots=True)
class TraceRecord:
    at: int
    node: str
    kind: str
    fields: tuple[tuple[str, object], ...] = ()

    def line(self) -> str:
        head = f"t={self.at} node={self.node} ev={self.kind}"
        if not self.fields:
            return head
        return head + " " + " ".join(f"{k}={fmt(v)}" for k, v in self.fields)

    def get(self, key: str, default: object = None) -> object:
        for k, v in self.fields:
            if k == key:
                return v
        return default


def parse_line(line: str, lineno: int = 0) -> TraceRecord:
    """Parse one trace line back; field values come back as strings."""
    parts = line.split(" ")
    if len(parts) < 3:
        raise MalformedTrace(lineno, "expected t=, node= and ev=")
    pairs = []
    for p in parts:
        k, sep, v = p.partition("=")
        if not sep or not k:
            raise MalformedTrace(lineno, f"bad field {p!r}")
        pairs.append((k, v))
    if [k for k, _ in pairs[:3]] != ["t", "node", "ev"]:
        raise MalformedTrace(lineno, "record must start with t=, node=, ev=")
    try:
        at = int(pairs[0][1])
    except ValueError:
        raise MalformedTrace(lineno, f"bad time {pairs[0][1]!r}") from None
    return TraceRecord(at, pairs[1][1], pairs[2][1], tuple(pairs[3:]))


class Trace:
    def __init__(self) -> None:
        self.records: list[TraceRecord] = []

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TraceRecord]:
        return iter(self.records)

    def emit(self, at: int, node: str, kind: str, **fields: object) -> None:
        self.records.append(TraceRecord(at, node, kind, tuple(fields.items())))

    def add(self, rec: TraceRecord) -> None:
        self.records.append(rec)

    def lines(self) -> list[str]:
        return [r.line() for r in self.records]

    def text(self) -> str:
        return "".join(line + "\n" for line in self.lines())

    def write(self, path: str | Path) -> int:
        data = self.text().encode("utf-8")
        Path(path).write_bytes(data)
        return len(data)


def protocol_lines(lines: Iterable[str]) -> list[str]:
    """Lines minus rule-engine bookkeeping records."""
    return [ln for ln in lines if ln.split(" ", 3)[2][3:] not in ENGINE_TAGS]


def digest(lines: Iterable[str]) -> str:
    """SHA-256 over the protocol lines, LF-terminated."""
    h = hashlib.sha256()
    for ln in protocol_lines(lines):
        h.update(ln.encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()
