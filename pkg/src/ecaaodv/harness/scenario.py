"""Scenario files: line-oriented ``key = value`` with ``#`` comments.

Scalar keys may appear once.  ``flow``, ``pos`` and ``cut`` may repeat::

    flow = <src> <dst> <start_ms> <interval_ms> <count>
    pos  = <index> <x> <y>
    cut  = <at_ms> <a> <b>

``cbr_flows = <n> <start_ms> <interval_ms> <count>`` adds ``n`` flows whose
endpoints are drawn from the seed once the node count is known, which is
what node-count sweeps use.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, fields, replace
from typing import Any, Callable

from ..aodv.protocol import AodvConfig
from ..sim.mobility import Area, MobilityParams
from ..sim.network import HELLO_MODES, Flow, LinkCut, SimParams, substream

PROTOCOLS = ("aodv", "eca-aodv")


class ScenarioError(ValueError):
    pass


class ParseError(ScenarioError):
    def __init__(self, line: int, reason: str) -> None:
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class RangeError(ScenarioError):
    def __init__(self, key: str, reason: str = "out of range") -> None:
        super().__init__(f"{key}: {reason}")
        self.key = key


@dataclass(frozen=True)
class CbrSpec:
    flows: int
    start: int
    interval: int
    count: int


@dataclass(frozen=True)
class ScenarioConfig:
    nodes: int = 100
    area_x: float = 25.0
    area_y: float = 25.0
    range_m: float = 30.0
    sim_time: int = 500_000
    seed: int = 0
    protocol: str = "eca-aodv"
    speed_min: float = 0.5
    speed_max: float = 2.0
    pause_s: float = 2.0
    hop_delay_ms: int = 2
    loss_p: float = 0.0
    hello: str = "on"
    hello_interval: int = 1000
    allowed_loss: int = 2
    active_route_timeout: int = 3000
    rrep_lifetime: int = 0  # 0: same as active_route_timeout
    discovery_timeout: int = 1000
    rreq_retries: int = 2
    rrep_ack: bool = True
    tick_ms: int = 100
    cbr_flows: CbrSpec | None = None
    flows: tuple[Flow, ...] = ()
    positions: tuple[tuple[int, float, float], ...] = ()
    cuts: tuple[LinkCut, ...] = ()

    def validate(self) -> "ScenarioConfig":
        def need(ok: bool, key: str, reason: str = "out of range") -> None:
            if not ok:
                raise RangeError(key, reason)

        need(self.nodes >= 1, "nodes")
        need(self.area_x > 0 and math.isfinite(self.area_x), "area_x")
        need(self.area_y > 0 and math.isfinite(self.area_y), "area_y")
        need(self.range_m > 0 and math.isfinite(self.range_m), "range_m")
        need(self.sim_time > 0, "sim_time")
        need(0 <= self.seed < 2**64, "seed")
        need(self.protocol in PROTOCOLS, "protocol", f"must be one of {', '.join(PROTOCOLS)}")
        need(0 <= self.speed_min <= self.speed_max and math.isfinite(self.speed_max), "speed_min", "need 0 <= speed_min <= speed_max")
        need(self.pause_s >= 0, "pause_s")
        need(self.hop_delay_ms >= 0, "hop_delay_ms")
        need(0.0 <= self.loss_p <= 1.0, "loss_p", "must be in [0, 1]")
        need(self.hello in HELLO_MODES, "hello", f"must be one of {', '.join(HELLO_MODES)}")
        for key in ("hello_interval", "allowed_loss", "active_route_timeout", "discovery_timeout", "tick_ms"):
            need(getattr(self, key) > 0, key)
        need(self.rrep_lifetime >= 0, "rrep_lifetime")
        need(self.rreq_retries >= 0, "rreq_retries")
        if self.flows or self.cbr_flows:
            need(self.nodes >= 2, "nodes", "flows need at least two nodes")
        for f in self.flows:
            need(f.src < self.nodes and f.dst < self.nodes, "flow", "endpoint index beyond node count")
        for i, x, y in self.positions:
            need(0 <= i < self.nodes, "pos", "node index beyond node count")
            need(0 <= x <= self.area_x and 0 <= y <= self.area_y, "pos", "outside the area")
        for c in self.cuts:
            need(c.a < self.nodes and c.b < self.nodes and c.a != c.b, "cut", "bad node pair")
        return self

    def with_overrides(self, **changes: Any) -> "ScenarioConfig":
        return replace(self, **changes).validate()

    def resolved_flows(self) -> tuple[Flow, ...]:
        """Explicit flows followed by the seed-drawn CBR flows."""
        out = list(self.flows)
        if self.cbr_flows is not None and self.nodes >= 2:
            rng = substream(self.seed, "traffic", "cbr")
            for _ in range(self.cbr_flows.flows):
                src, dst = rng.sample(range(self.nodes), 2)
                c = self.cbr_flows
                out.append(Flow(src, dst, c.start, c.interval, c.count))
        return tuple(out)

    def to_sim_params(self) -> SimParams:
        aodv = AodvConfig(
            active_route_timeout=self.active_route_timeout,
            discovery_timeout=self.discovery_timeout,
            rreq_retries=self.rreq_retries,
            hello_interval=self.hello_interval,
            allowed_loss=self.allowed_loss,
            ack_required=self.rrep_ack,
            rrep_lifetime=self.rrep_lifetime or None,
        )
        return SimParams(
            nodes=self.nodes,
            area=Area(self.area_x, self.area_y),
            range_m=self.range_m,
            seed=self.seed,
            mobility=MobilityParams(self.speed_min, self.speed_max, round(self.pause_s * 1000)),
            hop_delay=self.hop_delay_ms,
            loss_p=self.loss_p,
            hello=self.hello,
            aodv=aodv,
            tick_ms=self.tick_ms,
            positions=self.positions,
            flows=self.resolved_flows(),
            cuts=self.cuts,
        )


# -- parsing -------------------------------------------------------------------

def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(f"not a finite number: {text!r}")
    return v


def _ints(n: int) -> Callable[[str], tuple[int, ...]]:
    def conv(text: str) -> tuple[int, ...]:
        parts = text.split()
        if len(parts) != n:
            raise ValueError(f"expected {n} integers, got {len(parts)}")
        return tuple(int(p) for p in parts)

    return conv


def _pos(text: str) -> tuple[int, float, float]:
    parts = text.split()
    if len(parts) != 3:
        raise ValueError("expected: index x y")
    return int(parts[0]), _float(parts[1]), _float(parts[2])


_SCALARS: dict[str, Callable[[str], Any]] = {}
for _f in fields(ScenarioConfig):
    if _f.name in ("flows", "positions", "cuts", "cbr_flows"):
        continue
    _SCALARS[_f.name] = {"int": int, "float": _float, "str": str, "bool": _bool}[str(_f.type)]


def parse_scenario(text: str) -> ScenarioConfig:
    values: dict[str, Any] = {}
    flows: list[Flow] = []
    positions: list[tuple[int, float, float]] = []
    cuts: list[LinkCut] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ParseError(lineno, "expected key = value")
        if not value:
            raise ParseError(lineno, f"{key} has no value")
        try:
            if key == "flow":
                a = _ints(5)(value)
                try:
                    flows.append(Flow(*a))
                except ValueError as exc:
                    raise RangeError("flow", str(exc)) from None
            elif key == "pos":
                positions.append(_pos(value))
            elif key == "cut":
                cuts.append(LinkCut(*_ints(3)(value)))
            elif key == "cbr_flows":
                if key in values:
                    raise ParseError(lineno, f"duplicate key {key}")
                n, start, interval, count = _ints(4)(value)
                if n < 0 or start < 0 or interval <= 0 or count < 0:
                    raise RangeError("cbr_flows")
                values[key] = CbrSpec(n, start, interval, count)
            elif key in _SCALARS:
                if key in values:
                    raise ParseError(lineno, f"duplicate key {key}")
                values[key] = _SCALARS[key](value)
            else:
                raise ParseError(lineno, f"unknown key {key!r}")
        except (ParseError, RangeError):
            raise
        except ValueError as exc:
            raise ParseError(lineno, f"{key}: {exc}") from None
    cfg = ScenarioConfig(**values, flows=tuple(flows), positions=tuple(positions), cuts=tuple(cuts))
    return cfg.validate()


def apply_setting(cfg: ScenarioConfig, key: str, value: str) -> ScenarioConfig:
    """One ``key=value`` override, parsed exactly like a file line."""
    if key not in _SCALARS:
        raise ParseError(0, f"unknown key {key!r}")
    try:
        v = _SCALARS[key](value)
    except ValueError as exc:
        raise ParseError(0, f"{key}: {exc}") from None
    return cfg.with_overrides(**{key: v})


def _num(v: float) -> str:
    return repr(float(v))


def serialize(cfg: ScenarioConfig) -> str:
    lines = []
    for f in fields(ScenarioConfig):
        if f.name in _SCALARS:
            v = getattr(cfg, f.name)
            if isinstance(v, bool):
                text = "true" if v else "false"
            elif isinstance(v, float):
                text = _num(v)
            else:
                text = str(v)
            lines.append(f"{f.name} = {text}")
    if cfg.cbr_flows is not None:
        c = cfg.cbr_flows
        lines.append(f"cbr_flows = {c.flows} {c.start} {c.interval} {c.count}")
    for fl in cfg.flows:
        lines.append(f"flow = {fl.src} {fl.dst} {fl.start} {fl.interval} {fl.count}")
    for i, x, y in cfg.positions:
        lines.append(f"pos = {i} {_num(x)} {_num(y)}")
    for c in cfg.cuts:
        lines.append(f"cut = {c.at} {c.a} {c.b}")
    return "\n".join(lines) + "\n"


def connected_static_layout(nodes: int, area: float, range_m: float, rng: random.Random, attempts: int = 1000):
    """Uniform random positions whose unit-disk graph is connected."""
    for _ in range(attempts):
        pts = [(rng.uniform(0, area), rng.uniform(0, area)) for _ in range(nodes)]
        if _connected(pts, range_m):
            return tuple((i, x, y) for i, (x, y) in enumerate(pts))
    raise RuntimeError("no connected layout found; enlarge the range or shrink the area")


def _connected(pts: list[tuple[float, float]], range_m: float) -> bool:
    r2 = range_m * range_m
    seen = {0}
    stack = [0]
    while stack:
        i = stack.pop()
        for j, (x, y) in enumerate(pts):
            if j not in seen and (x - pts[i][0]) ** 2 + (y - pts[i][1]) ** 2 <= r2:
                seen.add(j)
                stack.append(j)
    return len(seen) == len(pts)
