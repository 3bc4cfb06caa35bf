"""The discrete-event MANET simulation.

A :class:`Simulation` owns the event queue, per-node protocol state,
mobility and the trace.  Routing decisions are delegated to a driver
(baseline or ECA); everything else (transmission, delay, loss, timers,
traffic) is the same for both, so their traces can be compared byte for
byte.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, replace
from typing import Sequence

from ..aodv.drivers import (
    BaselineDriver,
    Driver,
    GenerateRouteReply,
    GenerateRouteReplyAck,
    PrepareRouteRequest,
    RouteLinkBroken,
)
from ..aodv.messages import (
    DATA_PACKET_BYTES,
    DataPacket,
    HelloMessage,
    NodeId,
    RerrMessage,
    RrepAckMessage,
    RrepMessage,
    RreqMessage,
    ip_key,
    node_ip,
)
from ..aodv.protocol import (
    AodvConfig,
    DiscoveryTimeout,
    LinkBreakOutcome,
    NeighborLost,
    NodeProtocolState,
    Rebroadcast,
    Reply,
    RrepOutcome,
    handle_rerr,
    tick_timers,
    touch_route,
)
from .kernel import EventQueue
from .mobility import Area, MobilityParams, MobilityState, advance, initial_state, static_state
from .radio import neighbors
from .trace import Trace

HELLO_MODES = ("on", "off", "oracle")

# event kinds
DELIVER = "Deliver"
TICK = "TimerTick"
TRAFFIC = "TrafficSend"
HELLO = "HelloBeacon"
CUT = "LinkCut"


class NotANeighbor(Exception):
    def __init__(self, src: NodeId, dst: NodeId) -> None:
        super().__init__(f"{dst} is not a neighbour of {src}")
        self.src = src
        self.dst = dst


@dataclass(frozen=True)
class Flow:
    src: int
    dst: int
    start: int
    interval: int
    count: int

    def __post_init__(self) -> None:
        if self.src == self.dst:
            raise ValueError("flow source and destination must differ")
        if self.start < 0 or self.interval <= 0 or self.count < 0:
            raise ValueError("flow needs start >= 0, interval > 0, count >= 0")


@dataclass(frozen=True)
class LinkCut:
    at: int
    a: int
    b: int


@dataclass(frozen=True)
class SimParams:
    nodes: int = 2
    area: Area = Area(25.0, 25.0)
    range_m: float = 30.0
    seed: int = 0
    mobility: MobilityParams = MobilityParams()
    hop_delay: int = 2
    loss_p: float = 0.0
    hello: str = "on"
    aodv: AodvConfig = AodvConfig()
    tick_ms: int = 100
    positions: tuple[tuple[int, float, float], ...] = ()
    flows: tuple[Flow, ...] = ()
    cuts: tuple[LinkCut, ...] = ()

    def __post_init__(self) -> None:
        if self.hello not in HELLO_MODES:
            raise ValueError(f"hello must be one of {HELLO_MODES}")
        if not 0.0 <= self.loss_p <= 1.0:
            raise ValueError("loss_p must be in [0, 1]")
        if self.hop_delay < 0 or self.tick_ms <= 0:
            raise ValueError("hop_delay must be >= 0 and tick_ms > 0")


def substream(seed: int, node: str, stream: str) -> random.Random:
    """Independent generator for (seed, node, purpose)."""
    h = hashlib.sha256(f"{seed}|{node}|{stream}".encode()).digest()
    return random.Random(int.from_bytes(h[:8], "big"))


_TAGS = {
    RreqMessage: "RREQ",
    RrepMessage: "RREP",
    RerrMessage: "RERR",
    RrepAckMessage: "RREP_ACK",
    HelloMessage: "HELLO",
    DataPacket: "FWD",
}


def _tx_fields(msg: object) -> dict[str, object]:
    if isinstance(msg, DataPacket):
        return {"uid": msg.uid, "src": msg.src, "dst": msg.dst, "hops": msg.hops}
    if isinstance(msg, RreqMessage):
        return {
            "id": msg.rreq_id, "orig": msg.origin, "oseq": msg.origin_seq,
            "dest": msg.dest, "dseq": msg.dest_seq, "hops": msg.hop_count, "flags": msg.flags(),
        }
    if isinstance(msg, RrepMessage):
        return {
            "dest": msg.dest, "dseq": msg.dest_seq, "orig": msg.origin,
            "hops": msg.hop_count, "life": msg.lifetime, "a": msg.ack_required,
        }
    if isinstance(msg, RerrMessage):
        return {"n": msg.dest_count, "unreach": ",".join(f"{d}:{s}" for d, s in msg.unreachable)}
    if isinstance(msg, HelloMessage):
        return {"seq": msg.seq}
    return {}


@dataclass
class SimStats:
    processed: int = 0
    sent: int = 0
    delivered: int = 0


class Simulation:
    def __init__(self, params: SimParams, driver: Driver | None = None) -> None:
        if params.flows and params.nodes < 2:
            raise ValueError("flows need at least two nodes")
        self.params = params
        self.driver = driver or BaselineDriver()
        self.queue = EventQueue()
        self.trace = Trace()
        self.stats = SimStats()
        self.ips = [node_ip(i) for i in range(params.nodes)]
        cfg = replace(params.aodv, hello_enabled=params.hello == "on")
        self.nodes = {ip: NodeProtocolState(ip, cfg) for ip in self.ips}
        self._mob_rng = {ip: substream(params.seed, ip, "mobility") for ip in self.ips}
        self._loss_rng = {ip: substream(params.seed, ip, "loss") for ip in self.ips}
        fixed = {i: (x, y) for i, x, y in params.positions}
        for i in fixed:
            if not 0 <= i < params.nodes:
                raise ValueError(f"position given for unknown node index {i}")
        self.mobility: dict[NodeId, MobilityState] = {}
        for i, ip in enumerate(self.ips):
            if i in fixed:
                pos = fixed[i]
                if not params.area.contains(pos):
                    raise ValueError(f"node {i} placed outside the area")
                self.mobility[ip] = static_state(pos)
            else:
                self.mobility[ip] = initial_state(params.area, params.mobility, self._mob_rng[ip])
        self.cut_links: set[frozenset[NodeId]] = set()
        self._pos_cache: tuple[int, dict[NodeId, tuple[float, float]]] | None = None
        self._inflight: dict[str, DataPacket] = {}
        self._finished = False
        self._schedule_initial()

    # -- setup ---------------------------------------------------------------

    def _schedule_initial(self) -> None:
        p = self.params
        self.queue.schedule(p.tick_ms, TICK)
        if p.hello == "on":
            interval = p.aodv.hello_interval
            for ip in self.ips:
                offset = substream(p.seed, ip, "hello").randrange(interval)
                self.queue.schedule(offset, HELLO, ip)
        for idx, flow in enumerate(p.flows):
            self.generate_traffic(flow, idx)
        for cut in p.cuts:
            self.queue.schedule(cut.at, CUT, (self.ips[cut.a], self.ips[cut.b]))

    def generate_traffic(self, flow: Flow, index: int | None = None) -> int:
        """Schedule the ``count`` sends of a constant-bit-rate flow."""
        if not (0 <= flow.src < len(self.ips) and 0 <= flow.dst < len(self.ips)):
            raise ValueError("flow endpoints out of range")
        index = len(self.params.flows) if index is None else index
        for k in range(flow.count):
            self.queue.schedule(flow.start + k * flow.interval, TRAFFIC, (index, k, flow.src, flow.dst))
        return flow.count

    # -- geometry ------------------------------------------------------------

    @property
    def now(self) -> int:
        return self.queue.now

    def positions(self) -> dict[NodeId, tuple[float, float]]:
        now = self.now
        if self._pos_cache is not None and self._pos_cache[0] == now:
            return self._pos_cache[1]
        p = self.params
        out = {}
        for ip in self.ips:
            m = self.mobility[ip]
            advance(m, now, p.area, self._mob_rng[ip], p.mobility)
            out[ip] = m.pos
        self._pos_cache = (now, out)
        return out

    def neighbors_of(self, ip: NodeId) -> set[NodeId]:
        return neighbors(self.positions(), ip, self.params.range_m, self.cut_links)

    # -- main loop -----------------------------------------------------------

    def run_until(self, t_end: int) -> Trace:
        if t_end < self.now:
            raise ValueError("t_end precedes the current clock")
        q = self.queue
        while q:
            at = q.peek_time()
            if at is None or at > t_end:
                break
            ev = q.pop()
            self.stats.processed += 1
            kind = ev.kind
            if kind == DELIVER:
                self._on_deliver(*ev.payload)
            elif kind == TICK:
                self._on_tick()
            elif kind == TRAFFIC:
                self._on_traffic(*ev.payload)
            elif kind == HELLO:
                self._on_hello(ev.payload)
            elif kind == CUT:
                self._on_cut(*ev.payload)
        return self.trace

    def finish(self, at: int) -> None:
        """Record every data packet still queued or in flight at the end."""
        if self._finished:
            return
        self._finished = True
        for ip in self.ips:
            node = self.nodes[ip]
            for dest in sorted(node.pending, key=ip_key):
                for pkt in node.pending[dest].buffer:
                    self.trace.emit(at, ip, "BUFFERED", uid=pkt.uid, where="queue")
        for uid, pkt in self._inflight.items():
            self.trace.emit(at, pkt.src, "BUFFERED", uid=uid, where="inflight")

    # -- trace helpers -------------------------------------------------------

    def _flush(self, node: NodeProtocolState) -> None:
        if node.journal:
            now = self.now
            for tag, fields in node.drain():
                self.trace.emit(now, node.me, tag, **dict(fields))

    def _run_driver(self, node: NodeProtocolState, occ: object):
        out = self.driver.handle(node, occ, self.now)
        self._flush(node)
        return out

    # -- transmission --------------------------------------------------------

    def transmit(self, src: NodeId, msg: object, to: NodeId | None = None) -> list[NodeId]:
        """Send ``msg`` to every neighbour (``to`` None) or one neighbour.

        Returns the receivers whose delivery was scheduled.  Raises
        :class:`NotANeighbor` after tracing the link failure.
        """
        now = self.now
        tag = _TAGS[type(msg)]
        nbrs = self.neighbors_of(src)
        self.trace.emit(now, src, tag, to=to or "*", **_tx_fields(msg))
        if to is not None:
            if to not in nbrs:
                self.trace.emit(now, src, "LINK_FAIL", peer=to, msg=tag)
                raise NotANeighbor(src, to)
            targets = [to]
        else:
            targets = sorted(nbrs, key=ip_key)
        loss = self.params.loss_p
        rng = self._loss_rng[src]
        receivers = []
        for r in targets:
            if loss > 0.0 and rng.random() < loss:
                if isinstance(msg, DataPacket):
                    self.trace.emit(now, src, "DROP", uid=msg.uid, to=r, reason="loss")
                else:
                    self.trace.emit(now, src, "DROP", msg=tag, to=r, reason="loss")
            else:
                receivers.append(r)
        if receivers:
            if isinstance(msg, DataPacket):
                self._inflight[msg.uid] = msg
            self.queue.schedule(now + self.params.hop_delay, DELIVER, (msg, src, tuple(receivers)))
        return receivers

    def _unicast_control(self, src: NodeId, msg: object, to: NodeId) -> None:
        try:
            self.transmit(src, msg, to)
        except NotANeighbor:
            self.trace.emit(self.now, src, "DROP", msg=_TAGS[type(msg)], to=to, reason="link")
            self._link_broken(self.nodes[src], to)

    def _send_rerr(self, node: NodeProtocolState, rerr: RerrMessage | None, recipients: Sequence[NodeId]) -> None:
        if rerr is None or not recipients:
            return
        if len(recipients) == 1:
            self._unicast_control(node.me, rerr, recipients[0])
        else:
            self.transmit(node.me, rerr)

    # -- data path -----------------------------------------------------------

    def _forward_data(self, node: NodeProtocolState, pkt: DataPacket) -> None:
        now = self.now
        route = node.table.valid_route(pkt.dst, now)
        if route is None:
            self.trace.emit(now, node.me, "DROP", uid=pkt.uid, reason="no_route")
            return
        touch_route(node, pkt.dst, now)
        out = pkt.hopped()
        try:
            self.transmit(node.me, out, route.next_hop)
        except NotANeighbor:
            self.trace.emit(now, node.me, "DROP", uid=pkt.uid, reason="link")
            self._link_broken(node, route.next_hop)

    def _release(self, node: NodeProtocolState, dest: NodeId) -> None:
        """Pending packets for ``dest`` go out once a route is known."""
        p = node.pending.pop(dest, None)
        if p is not None:
            for pkt in p.buffer:
                self._forward_data(node, pkt)

    def _on_traffic(self, flow_idx: int, k: int, src_i: int, dst_i: int) -> None:
        now = self.now
        src, dst = self.ips[src_i], self.ips[dst_i]
        node = self.nodes[src]
        pkt = DataPacket(f"f{flow_idx}.{k}", src, dst, now)
        self.stats.sent += 1
        self.trace.emit(now, src, "SEND", uid=pkt.uid, dst=dst, bytes=DATA_PACKET_BYTES)
        if node.table.valid_route(dst, now) is not None:
            self._release(node, dst)
            self._forward_data(node, pkt)
            return
        pending = node.pending.get(dst)
        if pending is not None:
            pending.buffer.append(pkt)
            return
        rreq = self._run_driver(node, PrepareRouteRequest(dst))
        if isinstance(rreq, RreqMessage) and dst in node.pending:
            node.pending[dst].buffer.append(pkt)
            self.transmit(src, rreq)
        else:
            self.trace.emit(now, src, "DROP", uid=pkt.uid, reason="no_route")

    # -- receive path --------------------------------------------------------

    def _on_deliver(self, msg: object, src: NodeId, receivers: tuple[NodeId, ...]) -> None:
        if isinstance(msg, HelloMessage):
            now = self.now
            for r in receivers:
                self.nodes[r].neighbors[src] = now
            return
        if isinstance(msg, DataPacket):
            self._inflight.pop(msg.uid, None)
        for r in receivers:
            self._receive(self.nodes[r], msg, src)

    def _receive(self, node: NodeProtocolState, msg: object, src: NodeId) -> None:
        now = self.now
        node.heard(src, now)
        if isinstance(msg, DataPacket):
            if msg.dst == node.me:
                self.stats.delivered += 1
                self.trace.emit(now, node.me, "DELIVER", uid=msg.uid, src=msg.src, hops=msg.hops, lat=now - msg.sent_at)
            else:
                self._forward_data(node, msg)
        elif isinstance(msg, RreqMessage):
            if msg.origin == node.me:
                return
            out = self._run_driver(node, GenerateRouteReply(msg, src))
            if isinstance(out, Rebroadcast):
                self.transmit(node.me, out.rreq)
            elif isinstance(out, Reply):
                self._unicast_control(node.me, out.rrep, out.to)
        elif isinstance(msg, RrepMessage):
            out = self._run_driver(node, GenerateRouteReplyAck(msg, src))
            self._on_rrep_outcome(node, out)
        elif isinstance(msg, RerrMessage):
            res = handle_rerr(node, msg, src, now)
            self._flush(node)
            self._send_rerr(node, res.rerr, res.recipients)
        # hellos and RREP-ACKs only refresh the neighbour table

    def _on_rrep_outcome(self, node: NodeProtocolState, out: RrepOutcome) -> None:
        if out.ack_to is not None:
            self._unicast_control(node.me, RrepAckMessage(), out.ack_to)
        if out.action == "forward":
            self._unicast_control(node.me, out.forward, out.next_hop)
        elif out.action == "consume":
            for pkt in out.released:
                self._forward_data(node, pkt)

    # -- link maintenance ----------------------------------------------------

    def _link_broken(self, node: NodeProtocolState, lost: NodeId) -> None:
        self.trace.emit(self.now, node.me, "LINK_LOST", peer=lost)
        out = self._run_driver(node, RouteLinkBroken(lost))
        if isinstance(out, LinkBreakOutcome):
            self._send_rerr(node, out.rerr, out.recipients)

    def _on_hello(self, ip: NodeId) -> None:
        node = self.nodes[ip]
        self.transmit(ip, HelloMessage(node.seq))
        self.queue.schedule(self.now + self.params.aodv.hello_interval, HELLO, ip)

    def _on_cut(self, a: NodeId, b: NodeId) -> None:
        self.cut_links.add(frozenset((a, b)))
        self.trace.emit(self.now, a, "CUT", peer=b)
        if self.params.hello == "oracle":
            for x, y in ((a, b), (b, a)):
                self._link_broken(self.nodes[x], y)

    def _on_tick(self) -> None:
        now = self.now
        for ip in self.ips:
            node = self.nodes[ip]
            for exp in tick_timers(node, now):
                self._flush(node)
                if isinstance(exp, NeighborLost):
                    self._link_broken(node, exp.neighbor)
                elif isinstance(exp, DiscoveryTimeout):
                    self._on_discovery_timeout(node, exp)
            self._flush(node)
        self.queue.schedule(now + self.params.tick_ms, TICK)

    def _on_discovery_timeout(self, node: NodeProtocolState, exp: DiscoveryTimeout) -> None:
        now = self.now
        if exp.failed:
            if node.table.valid_route(exp.dest, now) is not None:
                for pkt in exp.dropped:
                    self._forward_data(node, pkt)
                return
            self.trace.emit(now, node.me, "DISCOVERY_FAIL", dest=exp.dest, dropped=len(exp.dropped))
            for pkt in exp.dropped:
                self.trace.emit(now, node.me, "DROP", uid=pkt.uid, reason="no_route")
            return
        if node.table.valid_route(exp.dest, now) is not None:
            self._release(node, exp.dest)
            return
        rreq = self._run_driver(node, PrepareRouteRequest(exp.dest))
        if isinstance(rreq, RreqMessage):
            self.transmit(node.me, rreq)
