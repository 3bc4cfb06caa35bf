"""Deterministic CSV output for run results."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .metrics import RunResult

COLUMNS = (
    "run_id", "protocol", "nodes", "seed", "pdr", "avg_latency_ms", "ctrl_bytes",
    "data_bytes", "overhead_ratio", "eca_events", "events_per_sec", "trace_digest",
)
MATCH_COLUMN = "digest_match"

_INT = {"nodes", "seed", "ctrl_bytes", "data_bytes", "eca_events"}
_FLOAT = {"pdr", "avg_latency_ms", "overhead_ratio", "events_per_sec"}


def cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)  # shortest round-tripping form, platform independent
    return str(value)


def result_row(res: RunResult, extra: Mapping[str, Any] | None = None) -> dict[str, Any]:
    row = {c: getattr(res, c) for c in COLUMNS}
    if extra:
        row.update(extra)
    return row


def render_csv(rows: Iterable[Mapping[str, Any] | RunResult], columns: Sequence[str] = COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        if isinstance(row, RunResult):
            row = result_row(row)
        w.writerow([cell(row.get(c)) for c in columns])
    return buf.getvalue()


def write_csv(rows: Iterable[Mapping[str, Any] | RunResult], out_path: str | Path, columns: Sequence[str] = COLUMNS) -> int:
    data = render_csv(rows, columns).encode("utf-8")
    Path(out_path).write_bytes(data)
    return len(data)


def _parse(column: str, text: str) -> Any:
    if text == "":
        return None
    if column in _INT:
        return int(text)
    if column in _FLOAT:
        return float(text)
    if column == MATCH_COLUMN:
        return text == "true"
    return text


def read_csv(path: str | Path) -> list[dict[str, Any]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [{k: _parse(k, v) for k, v in row.items()} for row in csv.DictReader(fh)]
