"""Per-node AODV protocol logic.

Every operation works on a :class:`NodeProtocolState` and returns what the
node wants to send; the simulator does the actual transmitting.  Routing
table changes are appended to ``state.journal`` so the simulator can trace
them.

The four decision points (prepare RREQ, generate RREP, link broken, send
RREP-ACK) are split into a mechanical part shared by both drivers and a
decision part that either the hard-coded baseline or the ECA adapter makes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .messages import (
    UNKNOWN_SEQ,
    DataPacket,
    NodeId,
    RerrMessage,
    RrepMessage,
    RreqMessage,
    ip_key,
)
from .table import RouteCandidate, RouteEntry, RoutingTable, UpdateResult, update_route


class AodvError(Exception):
    pass


class RouteAlreadyValid(AodvError):
    pass


@dataclass(frozen=True)
class AodvConfig:
    active_route_timeout: int = 3000
    seen_rreq_lifetime: int = 3000
    discovery_timeout: int = 1000
    rreq_retries: int = 2
    hello_interval: int = 1000
    allowed_loss: int = 2
    hello_enabled: bool = True
    ack_required: bool = True
    rrep_lifetime: int | None = None  # defaults to active_route_timeout

    @property
    def reply_lifetime(self) -> int:
        return self.rrep_lifetime if self.rrep_lifetime is not None else self.active_route_timeout

    @property
    def neighbor_timeout(self) -> int:
        return self.allowed_loss * self.hello_interval


@dataclass
class PendingDiscovery:
    dest: NodeId
    retries_left: int
    deadline: int
    buffer: list[DataPacket] = field(default_factory=list)

    @property
    def buffered(self) -> int:
        return len(self.buffer)


@dataclass
class NodeProtocolState:
    me: NodeId
    config: AodvConfig = field(default_factory=AodvConfig)
    seq: int = 0
    next_rreq_id: int = 1
    table: RoutingTable = field(default_factory=RoutingTable)
    seen_rreqs: dict[tuple[NodeId, int], int] = field(default_factory=dict)
    pending: dict[NodeId, PendingDiscovery] = field(default_factory=dict)
    neighbors: dict[NodeId, int] = field(default_factory=dict)
    last_tick: int = 0
    journal: list[tuple[str, tuple[tuple[str, object], ...]]] = field(default_factory=list)

    def note(self, tag: str, **fields: object) -> None:
        self.journal.append((tag, tuple(fields.items())))

    def drain(self) -> list[tuple[str, tuple[tuple[str, object], ...]]]:
        out, self.journal = self.journal, []
        return out

    def heard(self, neighbor: NodeId, now: int) -> None:
        self.neighbors[neighbor] = now


# -- outcomes ---------------------------------------------------------------


@dataclass(frozen=True)
class Discard:
    reason: str


@dataclass(frozen=True)
class Rebroadcast:
    rreq: RreqMessage


@dataclass(frozen=True)
class Reply:
    rrep: RrepMessage
    to: NodeId


RreqOutcome = Union[Discard, Rebroadcast, Reply]


@dataclass(frozen=True)
class RrepOutcome:
    action: str  # "forward" | "consume" | "discard"
    forward: RrepMessage | None = None
    next_hop: NodeId | None = None
    released: tuple[DataPacket, ...] = ()
    ack_to: NodeId | None = None
    reason: str = ""


@dataclass(frozen=True)
class LinkBreakOutcome:
    rerr: RerrMessage | None
    affected: tuple[NodeId, ...]
    recipients: tuple[NodeId, ...] = ()


@dataclass(frozen=True)
class RerrOutcome:
    rerr: RerrMessage | None
    invalidated: tuple[NodeId, ...]
    recipients: tuple[NodeId, ...] = ()


@dataclass(frozen=True)
class RouteExpired:
    dest: NodeId


@dataclass(frozen=True)
class DiscoveryTimeout:
    dest: NodeId
    retries_left: int
    failed: bool = False
    dropped: tuple[DataPacket, ...] = ()


@dataclass(frozen=True)
class NeighborLost:
    neighbor: NodeId


@dataclass(frozen=True)
class SeenRreqPurged:
    count: int


Expiry = Union[RouteExpired, DiscoveryTimeout, NeighborLost, SeenRreqPurged]


def _apply_update(node: NodeProtocolState, dest: NodeId, cand: RouteCandidate, now: int) -> UpdateResult:
    res = update_route(node.table, dest, cand, now)
    if res is not UpdateResult.REJECTED:
        node.note("ROUTE_ADD", dest=dest, next=cand.next_hop, hops=cand.hop_count, seq=cand.dest_seq, result=res.value)
    return res


def touch_route(node: NodeProtocolState, dest: NodeId, now: int) -> None:
    """Extend an active route's lifetime because it carried traffic."""
    e = node.table.valid_route(dest, now)
    if e is not None:
        e.expires_at = max(e.expires_at, now + node.config.active_route_timeout)


# -- E1: route discovery ----------------------------------------------------


def prepare_rreq(node: NodeProtocolState, dest: NodeId, now: int) -> RreqMessage:
    """Build and register a RREQ from the node's current sequence number."""
    rreq_id = node.next_rreq_id
    node.next_rreq_id += 1
    rreq = RreqMessage(rreq_id, dest, node.table.known_seq(dest), node.me, node.seq, 0)
    node.seen_rreqs[(node.me, rreq_id)] = now + node.config.seen_rreq_lifetime
    p = node.pending.get(dest)
    deadline = now + node.config.discovery_timeout
    if p is None:
        node.pending[dest] = PendingDiscovery(dest, node.config.rreq_retries, deadline)
    else:
        p.deadline = deadline
    return rreq


def originate_route_request(node: NodeProtocolState, dest: NodeId, now: int) -> RreqMessage:
    if node.table.valid_route(dest, now) is not None:
        raise RouteAlreadyValid(f"{node.me} already has a valid route to {dest}")
    node.seq += 1
    return prepare_rreq(node, dest, now)


# -- E2: route request handling ---------------------------------------------


def accept_rreq(node: NodeProtocolState, rreq: RreqMessage, from_: NodeId, now: int) -> bool:
    """Duplicate suppression plus reverse-route setup.  False means discard."""
    key = (rreq.origin, rreq.rreq_id)
    expiry = node.seen_rreqs.get(key)
    if expiry is not None and expiry >= now:
        return False
    node.seen_rreqs[key] = now + node.config.seen_rreq_lifetime
    cand = RouteCandidate(from_, rreq.hop_count + 1, rreq.origin_seq, node.config.active_route_timeout)
    _apply_update(node, rreq.origin, cand, now)
    return True


def should_reply(node: NodeProtocolState, rreq: RreqMessage, now: int) -> bool:
    if rreq.dest == node.me:
        return True
    e = node.table.valid_route(rreq.dest, now)
    # strictly greater, unknown (-1) below everything
    return e is not None and e.dest_seq > rreq.dest_seq


def build_reply(node: NodeProtocolState, rreq: RreqMessage, from_: NodeId, now: int) -> RrepMessage:
    cfg = node.config
    if rreq.dest == node.me:
        node.seq += 1
        return RrepMessage(node.me, node.seq, rreq.origin, cfg.reply_lifetime, 0, ack_required=cfg.ack_required)
    fwd = node.table.valid_route(rreq.dest, now)
    if fwd is None:
        raise AodvError(f"{node.me} has no route to {rreq.dest} to reply with")
    fwd.precursors.add(from_)
    rev = node.table.get(rreq.origin)
    if rev is not None:
        rev.precursors.add(fwd.next_hop)
    lifetime = max(1, fwd.expires_at - now)
    return RrepMessage(rreq.dest, fwd.dest_seq, rreq.origin, lifetime, fwd.hop_count, ack_required=cfg.ack_required)


def handle_rreq(node: NodeProtocolState, rreq: RreqMessage, from_: NodeId, now: int) -> RreqOutcome:
    if not accept_rreq(node, rreq, from_, now):
        return Discard("duplicate")
    if should_reply(node, rreq, now):
        return Reply(build_reply(node, rreq, from_, now), from_)
    return Rebroadcast(rreq.forwarded())


# -- E4: route reply handling -----------------------------------------------


def absorb_rrep(node: NodeProtocolState, rrep: RrepMessage, from_: NodeId, now: int) -> RrepOutcome:
    """Install the forward route and work out where the RREP goes next."""
    cand = RouteCandidate(from_, rrep.hop_count + 1, rrep.dest_seq, rrep.lifetime)
    if _apply_update(node, rrep.dest, cand, now) is UpdateResult.REJECTED:
        return RrepOutcome("discard", reason="stale")
    if rrep.origin == node.me:
        p = node.pending.pop(rrep.dest, None)
        return RrepOutcome("consume", released=tuple(p.buffer) if p else ())
    rev = node.table.valid_route(rrep.origin, now)
    if rev is None:
        return RrepOutcome("discard", reason="no_reverse_route")
    fwd = node.table.get(rrep.dest)
    fwd.precursors.add(rev.next_hop)
    rev.precursors.add(from_)
    rev.expires_at = max(rev.expires_at, now + node.config.active_route_timeout)
    return RrepOutcome("forward", forward=rrep.forwarded(), next_hop=rev.next_hop)


def handle_rrep(node: NodeProtocolState, rrep: RrepMessage, from_: NodeId, now: int) -> RrepOutcome:
    out = absorb_rrep(node, rrep, from_, now)
    if rrep.ack_required:
        return _with_ack(out, from_)
    return out


def _with_ack(out: RrepOutcome, to: NodeId) -> RrepOutcome:
    return RrepOutcome(out.action, out.forward, out.next_hop, out.released, to, out.reason)


# -- E3: link breaks ---------------------------------------------------------


def invalidate_routes_via(node: NodeProtocolState, lost: NodeId, now: int, reason: str = "link") -> list[RouteEntry]:
    affected = node.table.routes_via(lost)
    for e in affected:
        e.valid = False
        if e.dest_seq != UNKNOWN_SEQ:
            e.dest_seq += 1
        node.note("ROUTE_INVALIDATE", dest=e.dest, seq=e.dest_seq, reason=reason)
    return affected


def list_affected(node: NodeProtocolState, affected: list[RouteEntry], lost: NodeId) -> LinkBreakOutcome:
    if not affected:
        return LinkBreakOutcome(None, ())
    rerr = RerrMessage(tuple((e.dest, e.dest_seq) for e in affected))
    recipients: set[NodeId] = set()
    for e in affected:
        recipients |= e.precursors
    recipients.discard(lost)
    return LinkBreakOutcome(rerr, tuple(e.dest for e in affected), tuple(sorted(recipients, key=ip_key)))


def detect_link_break(node: NodeProtocolState, lost: NodeId, now: int) -> LinkBreakOutcome:
    node.neighbors.pop(lost, None)
    affected = invalidate_routes_via(node, lost, now)
    return list_affected(node, affected, lost)


def handle_rerr(node: NodeProtocolState, rerr: RerrMessage, from_: NodeId, now: int) -> RerrOutcome:
    relevant: list[tuple[NodeId, int]] = []
    recipients: set[NodeId] = set()
    for dest, seq in rerr.unreachable:
        e = node.table.get(dest)
        if e is None or not e.valid or e.next_hop != from_ or e.dest_seq > seq:
            continue
        e.valid = False
        e.dest_seq = seq
        node.note("ROUTE_INVALIDATE", dest=dest, seq=seq, reason="rerr")
        relevant.append((dest, seq))
        recipients |= e.precursors
    recipients.discard(from_)
    if not relevant:
        return RerrOutcome(None, ())
    return RerrOutcome(
        RerrMessage(tuple(relevant), rerr.no_delete),
        tuple(d for d, _ in relevant),
        tuple(sorted(recipients, key=ip_key)),
    )


# -- timers ------------------------------------------------------------------


def tick_timers(node: NodeProtocolState, now: int) -> list[Expiry]:
    if now < node.last_tick:
        raise ValueError(f"tick at {now} precedes previous tick at {node.last_tick}")
    node.last_tick = now
    out: list[Expiry] = []
    expired = [e for e in node.table if e.valid and e.expires_at < now]
    for e in sorted(expired, key=lambda e: ip_key(e.dest)):
        # entry kept (invalid) so its sequence number survives
        e.valid = False
        node.note("ROUTE_INVALIDATE", dest=e.dest, seq=e.dest_seq, reason="expired")
        out.append(RouteExpired(e.dest))
    due = [d for d, p in node.pending.items() if p.deadline <= now]
    for dest in sorted(due, key=ip_key):
        p = node.pending[dest]
        if p.retries_left > 0:
            p.retries_left -= 1
            out.append(DiscoveryTimeout(dest, p.retries_left))
        else:
            del node.pending[dest]
            out.append(DiscoveryTimeout(dest, 0, failed=True, dropped=tuple(p.buffer)))
    if node.config.hello_enabled:
        limit = node.config.neighbor_timeout
        silent = [nb for nb, heard in node.neighbors.items() if now - heard > limit]
        for nb in sorted(silent, key=ip_key):
            out.append(NeighborLost(nb))
    stale = [k for k, exp in node.seen_rreqs.items() if exp < now]
    for k in stale:
        del node.seen_rreqs[k]
    if stale:
        out.append(SeenRreqPurged(len(stale)))
    return out
