"""The four AODV decision points and the hard-coded baseline driver.

A driver turns a decision-point occurrence into the protocol output.  The
simulator is indifferent to which driver it runs; the ECA driver lives in
:mod:`ecaaodv.aodv.eca_adapter`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Union

from .messages import NodeId, RrepMessage, RreqMessage
from .protocol import (
    LinkBreakOutcome,
    NodeProtocolState,
    RreqOutcome,
    RrepOutcome,
    detect_link_break,
    handle_rrep,
    handle_rreq,
    originate_route_request,
)


@dataclass(frozen=True)
class PrepareRouteRequest:
    """E1: data is waiting and no valid route exists."""

    dest: NodeId


@dataclass(frozen=True)
class GenerateRouteReply:
    """E2: a RREQ arrived; reply or keep flooding."""

    rreq: RreqMessage
    from_: NodeId


@dataclass(frozen=True)
class RouteLinkBroken:
    """E3: a neighbour was lost."""

    lost: NodeId


@dataclass(frozen=True)
class GenerateRouteReplyAck:
    """E4: a RREP arrived; acknowledge it if asked to."""

    rrep: RrepMessage
    from_: NodeId


AodvOccurrence = Union[PrepareRouteRequest, GenerateRouteReply, RouteLinkBroken, GenerateRouteReplyAck]
DriverOutput = Union[RreqMessage, None, RreqOutcome, RrepOutcome, LinkBreakOutcome]


class Driver(Protocol):
    name: str

    def handle(self, node: NodeProtocolState, occ: AodvOccurrence, now: int) -> DriverOutput: ...


class BaselineDriver:
    name = "aodv"

    def handle(self, node: NodeProtocolState, occ: AodvOccurrence, now: int) -> DriverOutput:
        if isinstance(occ, PrepareRouteRequest):
            return originate_route_request(node, occ.dest, now)
        if isinstance(occ, GenerateRouteReply):
            return handle_rreq(node, occ.rreq, occ.from_, now)
        if isinstance(occ, GenerateRouteReplyAck):
            return handle_rrep(node, occ.rrep, occ.from_, now)
        if isinstance(occ, RouteLinkBroken):
            return detect_link_break(node, occ.lost, now)
        raise TypeError(f"not an AODV occurrence: {occ!r}")
