"""Run metrics recomputed from a trace."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from ..aodv.messages import DATA_PACKET_BYTES, control_bytes
from ..sim.trace import ENGINE_TAGS, MalformedTrace, digest, parse_line

CONTROL_TAGS = ("RREQ", "RREP", "RERR", "RREP_ACK", "HELLO")


@dataclass
class RunResult:
    run_id: str = ""
    protocol: str = ""
    nodes: int = 0
    seed: int = 0
    sent: int = 0
    delivered: int = 0
    dropped: int = 0
    buffered: int = 0
    pdr: float = 0.0
    avg_latency_ms: float | None = None  # None: nothing delivered
    ctrl_bytes: int = 0
    data_bytes: int = 0
    overhead_ratio: float | None = None  # None: undefined, no data delivered
    eca_events: int = 0
    rreq_count: int = 0
    rrep_count: int = 0
    events_per_sec: float = 0.0
    sim_events: int = 0
    trace_digest: str = ""

    @property
    def overhead_defined(self) -> bool:
        return self.overhead_ratio is not None

    @property
    def messages(self) -> int:
        """RREQ plus RREP transmissions."""
        return self.rreq_count + self.rrep_count


def compute_metrics(lines: Iterable[str]) -> RunResult:
    lines = list(lines)
    sent_at: dict[str, int] = {}
    latencies: list[int] = []
    res = RunResult()
    for n, line in enumerate(lines, start=1):
        rec = parse_line(line, n)
        kind = rec.kind
        if kind == "SEND":
            uid = rec.get("uid")
            if uid is None:
                raise MalformedTrace(n, "SEND without uid")
            sent_at[uid] = rec.at
            res.sent += 1
        elif kind == "DELIVER":
            uid = rec.get("uid")
            if uid not in sent_at:
                raise MalformedTrace(n, f"DELIVER of unsent packet {uid}")
            latencies.append(rec.at - sent_at[uid])
            res.delivered += 1
        elif kind == "DROP":
            if rec.get("uid") is not None:
                res.dropped += 1
        elif kind == "BUFFERED":
            res.buffered += 1
        elif kind in CONTROL_TAGS:
            count = 0
            if kind == "RERR":
                try:
                    count = int(rec.get("n"))
                except (TypeError, ValueError):
                    raise MalformedTrace(n, "RERR without a destination count") from None
            res.ctrl_bytes += control_bytes(kind, count)
            if kind == "RREQ":
                res.rreq_count += 1
            elif kind == "RREP":
                res.rrep_count += 1
        elif kind in ENGINE_TAGS:
            res.eca_events += 1
    res.pdr = res.delivered / res.sent if res.sent else 0.0
    res.avg_latency_ms = sum(latencies) / len(latencies) if latencies else None
    res.data_bytes = DATA_PACKET_BYTES * res.delivered
    res.overhead_ratio = res.ctrl_bytes / res.data_bytes if res.data_bytes else None
    res.trace_digest = digest(lines)
    return res
