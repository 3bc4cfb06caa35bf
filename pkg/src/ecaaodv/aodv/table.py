"""Routing table with destination-sequence-number freshness."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator

from .messages import UNKNOWN_SEQ, NodeId, ip_key


class UpdateResult(enum.Enum):
    INSTALLED = "Installed"
    REFRESHED = "Refreshed"
    REJECTED = "Rejected"


@dataclass
class RouteEntry:
    dest: NodeId
    next_hop: NodeId
    hop_count: int
    dest_seq: int
    valid: bool
    expires_at: int
    precursors: set[NodeId] = field(default_factory=set)


@dataclass(frozen=True, slots=True)
class RouteCandidate:
    next_hop: NodeId
    hop_count: int
    dest_seq: int
    lifetime: int


class RoutingTable:
    def __init__(self) -> None:
        self._entries: dict[NodeId, RouteEntry] = {}

    def __contains__(self, dest: NodeId) -> bool:
        return dest in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[RouteEntry]:
        return iter(self._entries.values())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RoutingTable):
            return NotImplemented
        return self._entries == other._entries

    __hash__ = None  # type: ignore[assignment]

    def get(self, dest: NodeId) -> RouteEntry | None:
        return self._entries.get(dest)

    def valid_route(self, dest: NodeId, now: int) -> RouteEntry | None:
        e = self._entries.get(dest)
        if e is not None and e.valid and e.expires_at >= now:
            return e
        return None

    def known_seq(self, dest: NodeId) -> int:
        e = self._entries.get(dest)
        return UNKNOWN_SEQ if e is None else e.dest_seq

    def put(self, entry: RouteEntry) -> None:
        self._entries[entry.dest] = entry

    def routes_via(self, next_hop: NodeId) -> list[RouteEntry]:
        """Valid entries using ``next_hop``, in destination order."""
        return sorted(
            (e for e in self._entries.values() if e.valid and e.next_hop == next_hop),
            key=lambda e: ip_key(e.dest),
        )


def is_fresher(stored: RouteEntry, cand: RouteCandidate) -> bool:
    """Replacement rule: newer sequence number, or equal number with the
    stored route invalid or longer."""
    if stored.dest_seq == UNKNOWN_SEQ:
        return True
    if cand.dest_seq > stored.dest_seq:
        return True
    if cand.dest_seq == stored.dest_seq:
        return not stored.valid or cand.hop_count < stored.hop_count
    return False


def update_route(table: RoutingTable, dest: NodeId, cand: RouteCandidate, now: int) -> UpdateResult:
    if cand.lifetime <= 0:
        raise ValueError("candidate lifetime must be positive")
    stored = table.get(dest)
    if stored is None:
        table.put(RouteEntry(dest, cand.next_hop, cand.hop_count, cand.dest_seq, True, now + cand.lifetime))
        return UpdateResult.INSTALLED
    if not is_fresher(stored, cand):
        return UpdateResult.REJECTED
    stored.next_hop = cand.next_hop
    stored.hop_count = cand.hop_count
    stored.dest_seq = cand.dest_seq
    stored.valid = True
    stored.expires_at = now + cand.lifetime
    return UpdateResult.REFRESHED
