"""ECA-AODV: the four decision points answered by the rule engine.

Each occurrence is turned into a raw field map (packet fields plus event
id and timestamp), classified into an :class:`~ecaaodv.eca.Event`, run through
:func:`~ecaaodv.eca.process_event`, and the resulting decisions are mapped
back onto the same protocol effects the baseline driver produces.
"""

from __future__ import annotations

from datetime import datetime, timedelta
from typing import Any

from ..eca import (
    NOTIFICATION,
    REQUEST,
    Classifier,
    DataType,
    Decision,
    EcaError,
    EvalContext,
    Occurrence,
    RuleRegistry,
    classify_event,
    default_aodv_machine,
    process_event,
    step_state_machine,
)
from ..eca.state_machine import EcaStateMachine
from ..harness.rulefile import RuleHost, parse_rules
from ..resources import read_data
from .drivers import (
    AodvOccurrence,
    DriverOutput,
    GenerateRouteReply,
    GenerateRouteReplyAck,
    PrepareRouteRequest,
    RouteLinkBroken,
)
from .messages import RERR, RREP, RREP_ACK, RREQ
from .protocol import (
    Discard,
    LinkBreakOutcome,
    NodeProtocolState,
    Rebroadcast,
    Reply,
    _with_ack,
    absorb_rrep,
    accept_rreq,
    build_reply,
    invalidate_routes_via,
    list_affected,
    prepare_rreq,
)


class UnhandledDecision(EcaError):
    pass


# wall-clock origin for the datetime attribute of simulated events
SIM_EPOCH = datetime(2015, 3, 10, 13, 0)

AODV_HOST = RuleHost(
    actions=frozenset({"BroadcastRreq", "ReplyRrep", "InvalidateRoutes", "ListAffected", "SendRrepAck"}),
    probes=frozenset({"valid_route", "active_route", "is_destination", "link_failed"}),
)

AODV_FIELD_TYPES = {
    "event_id": DataType.GUID,
    "occurred": DataType.DATETIME,
    "packet_type": DataType.INT,
    "J": DataType.BOOL,
    "R": DataType.BOOL,
    "G": DataType.BOOL,
    "D": DataType.BOOL,
    "A": DataType.BOOL,
    "N": DataType.BOOL,
    "prefix_size": DataType.INT,
    "hop_count": DataType.INT,
    "rreq_id": DataType.INT,
    "dest_ip": DataType.IP,
    "dest_seq": DataType.INT,
    "src_ip": DataType.IP,
    "src_seq": DataType.INT,
    "lifetime": DataType.DURATION,
    "dest_count": DataType.INT,
    "lost_neighbor": DataType.IP,
    "prev_hop": DataType.IP,
    "rreq_dest_seq": DataType.INT,
}

AODV_KINDS = {
    "prepare_route_request": REQUEST,
    "generate_route_reply": REQUEST,
    "link_broken": NOTIFICATION,
    "generate_route_reply_ack": REQUEST,
}

AODV_CLASSIFIER = Classifier(AODV_KINDS, AODV_FIELD_TYPES)

_EVENT_LABEL = {
    "prepare_route_request": "E1",
    "generate_route_reply": "E2",
    "link_broken": "E3",
    "generate_route_reply_ack": "E4",
}


def load_default_registry() -> RuleRegistry:
    return parse_rules(read_data("default_aodv.rules"), AODV_HOST)


def occurrence_fields(node: NodeProtocolState, occ: AodvOccurrence, now: int) -> tuple[str, dict[str, Any]]:
    """Raw field map for an occurrence, packet fields in header order."""
    cfg = node.config
    if isinstance(occ, PrepareRouteRequest):
        return "prepare_route_request", {
            "packet_type": RREQ,
            "J": False,
            "R": False,
            "G": False,
            "D": False,
            "hop_count": 0,
            "rreq_id": node.next_rreq_id,
            "dest_ip": occ.dest,
            "dest_seq": node.table.known_seq(occ.dest),
            "src_ip": node.me,
            "src_seq": node.seq + 1,
        }
    if isinstance(occ, GenerateRouteReply):
        rreq = occ.rreq
        if rreq.dest == node.me:
            hops, seq = 0, node.seq
        else:
            e = node.table.get(rreq.dest)
            hops, seq = (e.hop_count, e.dest_seq) if e is not None else (0, node.table.known_seq(rreq.dest))
        return "generate_route_reply", {
            "packet_type": RREP,
            "R": False,
            "A": cfg.ack_required,
            "prefix_size": 0,
            "hop_count": hops,
            "dest_ip": rreq.origin,
            "dest_seq": seq,
            "src_ip": rreq.dest,
            "lifetime": cfg.reply_lifetime,
            "rreq_dest_seq": rreq.dest_seq,
            "prev_hop": occ.from_,
        }
    if isinstance(occ, RouteLinkBroken):
        affected = node.table.routes_via(occ.lost)
        fields: dict[str, Any] = {"packet_type": RERR, "N": False, "dest_count": len(affected)}
        if affected:
            fields["dest_ip"] = affected[0].dest
            fields["dest_seq"] = affected[0].dest_seq
        fields["lost_neighbor"] = occ.lost
        return "link_broken", fields
    if isinstance(occ, GenerateRouteReplyAck):
        rrep = occ.rrep
        return "generate_route_reply_ack", {
            "packet_type": RREP_ACK,
            "R": rrep.repair,
            "A": rrep.ack_required,
            "prefix_size": rrep.prefix_size,
            "hop_count": rrep.hop_count,
            "dest_ip": rrep.origin,
            "dest_seq": rrep.dest_seq,
            "src_ip": rrep.dest,
            "lifetime": rrep.lifetime,
            "prev_hop": occ.from_,
        }
    raise TypeError(f"not an AODV occurrence: {occ!r}")


def _context(node: NodeProtocolState, occ: AodvOccurrence, now: int) -> EvalContext:
    if isinstance(occ, PrepareRouteRequest):
        dest = occ.dest
    elif isinstance(occ, GenerateRouteReply):
        dest = occ.rreq.dest
    elif isinstance(occ, GenerateRouteReplyAck):
        dest = occ.rrep.dest
    else:
        dest = None

    def has_route() -> bool:
        return dest is not None and node.table.valid_route(dest, now) is not None

    lost = occ.lost if isinstance(occ, RouteLinkBroken) else None
    probes = {
        "valid_route": has_route,
        "active_route": has_route,
        "is_destination": lambda: dest == node.me,
        "link_failed": lambda: lost is not None and lost not in node.neighbors,
    }
    return EvalContext(probes, {"seq": node.seq})


class EcaDriver:
    """Decision driver backed by a frozen rule registry."""

    name = "eca-aodv"

    def __init__(self, registry: RuleRegistry, machine: EcaStateMachine | None = None) -> None:
        if not registry.frozen:
            registry.freeze()
        self.registry = registry
        self.machine = machine or default_aodv_machine()
        self.states: dict[str, str] = {}
        self.events_processed = 0
        self._next_event_id = 1

    def handle(self, node: NodeProtocolState, occ: AodvOccurrence, now: int) -> DriverOutput:
        return eca_decision_adapter(node, occ, self, now)

    def _fire(self, node: NodeProtocolState, occ: AodvOccurrence, now: int) -> list[Decision]:
        kind, fields = occurrence_fields(node, occ, now)
        event_id = self._next_event_id
        self._next_event_id += 1
        raw_fields = {"event_id": event_id, "occurred": SIM_EPOCH + timedelta(milliseconds=now), **fields}
        event = classify_event(Occurrence(kind, raw_fields, now, node.me, event_id), AODV_CLASSIFIER)
        ctx = _context(node, occ, now)
        decisions = process_event(event, self.registry, ctx)
        node.seq = ctx.counters["seq"]
        self.events_processed += 1
        state = self.states.get(node.me, self.machine.initial)
        nxt, final = step_state_machine(self.machine, state, event.event_type, bool(decisions))
        self.states[node.me] = nxt
        node.note(
            "ECA_FIRE",
            event=_EVENT_LABEL[kind],
            type=str(event.event_type),
            rules=",".join(dict.fromkeys(d.rule_id for d in decisions)) or "-",
            decisions=",".join(d.name for d in decisions) or "-",
            state=nxt,
            final=int(final),
        )
        return decisions


def _names(decisions: list[Decision], allowed: set[str], where: str) -> dict[str, Decision]:
    out: dict[str, Decision] = {}
    for d in decisions:
        if d.name not in allowed:
            raise UnhandledDecision(f"decision {d.name} (rule {d.rule_id}) has no meaning at {where}")
        out.setdefault(d.name, d)
    return out


def eca_decision_adapter(node: NodeProtocolState, occ: AodvOccurrence, driver: EcaDriver, now: int) -> DriverOutput:
    """Same outputs as the matching baseline operation, decided by rules."""
    if isinstance(occ, PrepareRouteRequest):
        got = _names(driver._fire(node, occ, now), {"BroadcastRreq"}, "E1")
        if "BroadcastRreq" not in got:
            return None
        dest = got["BroadcastRreq"].arg("dest", occ.dest)
        return prepare_rreq(node, dest, now)

    if isinstance(occ, GenerateRouteReply):
        if not accept_rreq(node, occ.rreq, occ.from_, now):
            return Discard("duplicate")
        got = _names(driver._fire(node, occ, now), {"ReplyRrep"}, "E2")
        if "ReplyRrep" in got:
            return Reply(build_reply(node, occ.rreq, occ.from_, now), occ.from_)
        return Rebroadcast(occ.rreq.forwarded())

    if isinstance(occ, GenerateRouteReplyAck):
        out = absorb_rrep(node, occ.rrep, occ.from_, now)
        got = _names(driver._fire(node, occ, now), {"SendRrepAck"}, "E4")
        if "SendRrepAck" in got:
            return _with_ack(out, got["SendRrepAck"].arg("to", occ.from_))
        return out

    if isinstance(occ, RouteLinkBroken):
        node.neighbors.pop(occ.lost, None)
        got = _names(driver._fire(node, occ, now), {"InvalidateRoutes", "ListAffected"}, "E3")
        affected = []
        if "InvalidateRoutes" in got:
            affected = invalidate_routes_via(node, occ.lost, now)
        if "ListAffected" in got:
            return list_affected(node, affected, occ.lost)
        return LinkBreakOutcome(None, tuple(e.dest for e in affected))

    raise TypeError(f"not an AODV occurrence: {occ!r}")
