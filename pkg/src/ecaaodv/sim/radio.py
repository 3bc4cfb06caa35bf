"""Unit-disk radio: a link exists iff distance <= range (closed ball)."""

from __future__ import annotations

from typing import Collection, Mapping


def neighbors(
    positions: Mapping[str, tuple[float, float]],
    node: str,
    range_m: float,
    blocked: Collection[frozenset[str]] = (),
) -> set[str]:
    x, y = positions[node]
    r2 = range_m * range_m
    out = set()
    for other, (ox, oy) in positions.items():
        if other == node:
            continue
        dx, dy = ox - x, oy - y
        if dx * dx + dy * dy <= r2 and (not blocked or frozenset((node, other)) not in blocked):
            out.add(other)
    return out
