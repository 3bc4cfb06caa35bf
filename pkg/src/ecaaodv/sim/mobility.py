"""Random-waypoint mobility."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Area:
    x: float
    y: float

    def contains(self, pos: tuple[float, float]) -> bool:
        return 0.0 <= pos[0] <= self.x and 0.0 <= pos[1] <= self.y

    def uniform_point(self, rng: random.Random) -> tuple[float, float]:
        return (rng.uniform(0.0, self.x), rng.uniform(0.0, self.y))


@dataclass(frozen=True)
class MobilityParams:
    speed_min: float = 0.5  # m/s
    speed_max: float = 2.0
    pause_ms: int = 2000


@dataclass
class MobilityState:
    pos: tuple[float, float]
    waypoint: tuple[float, float]
    speed: float
    pause_until: float = 0.0
    t: float = 0.0  # ms the state refers to


def initial_state(area: Area, params: MobilityParams, rng: random.Random) -> MobilityState:
    pos = area.uniform_point(rng)
    return MobilityState(pos, area.uniform_point(rng), rng.uniform(params.speed_min, params.speed_max))


def static_state(pos: tuple[float, float]) -> MobilityState:
    return MobilityState(pos, pos, 0.0)


def _clamp(pos: tuple[float, float], area: Area) -> tuple[float, float]:
    return (min(max(pos[0], 0.0), area.x), min(max(pos[1], 0.0), area.y))


def advance(m: MobilityState, t: float, area: Area, rng: random.Random, params: MobilityParams) -> None:
    """Move ``m`` forward in place to time ``t`` (ms)."""
    while m.t < t:
        if m.pause_until > m.t:
            m.t = min(t, m.pause_until)
            continue
        if m.speed <= 0.0:
            m.t = t
            return
        dx = m.waypoint[0] - m.pos[0]
        dy = m.waypoint[1] - m.pos[1]
        travel = math.hypot(dx, dy) / m.speed * 1000.0
        if m.t + travel <= t:
            m.t += travel
            m.pos = m.waypoint
            m.pause_until = m.t + params.pause_ms
            m.waypoint = area.uniform_point(rng)
            m.speed = rng.uniform(params.speed_min, params.speed_max)
            if travel == 0.0 and params.pause_ms == 0:
                # zero-length leg with no pause: stop rather than spin
                m.pause_until = m.t
                if m.waypoint == m.pos:
                    m.t = t
        else:
            frac = (t - m.t) / travel
            m.pos = _clamp((m.pos[0] + frac * dx, m.pos[1] + frac * dy), area)
            m.t = t


def mobility_step(
    m: MobilityState,
    dt: float,
    area: Area,
    rng: random.Random,
    params: MobilityParams = MobilityParams(),
) -> MobilityState:
    """Copy of ``m`` advanced by ``dt`` milliseconds."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    out = replace(m)
    advance(out, m.t + dt, area, rng, params)
    return out
