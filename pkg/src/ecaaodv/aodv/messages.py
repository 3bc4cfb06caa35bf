"""AODV control messages and the byte-size ledger used for overhead accounting."""

from __future__ import annotations

import functools
import ipaddress
from dataclasses import dataclass, field

NodeId = str  # dotted-quad IPv4 address; doubles as node identity

# Unknown destination sequence number.  Sorts below every real value so that
# any stored sequence number is "greater" than it.
UNKNOWN_SEQ = -1

RREQ, RREP, RERR, RREP_ACK = 1, 2, 3, 4

DATA_PACKET_BYTES = 512
HELLO_BYTES = 20
CONTROL_BYTES = {"RREQ": 24, "RREP": 20, "RREP_ACK": 2, "HELLO": HELLO_BYTES}


def rerr_bytes(dest_count: int) -> int:
    return 4 + 8 * dest_count


def control_bytes(tag: str, dest_count: int = 0) -> int:
    if tag == "RERR":
        return rerr_bytes(dest_count)
    return CONTROL_BYTES[tag]


def check_node_id(addr: str) -> NodeId:
    return str(ipaddress.IPv4Address(addr))


def node_ip(index: int) -> NodeId:
    """Address of the ``index``-th simulated node: 10.32.21.1, 10.32.21.2, ..."""
    base = int(ipaddress.IPv4Address("10.32.21.1"))
    return str(ipaddress.IPv4Address(base + index))


@functools.lru_cache(maxsize=None)
def ip_key(addr: str) -> tuple[int, ...]:
    """Numeric sort key for a dotted-quad address."""
    return tuple(int(p) for p in addr.split("."))


def seq_text(seq: int) -> str:
    return "-" if seq == UNKNOWN_SEQ else str(seq)


@dataclass(frozen=True, slots=True)
class RreqMessage:
    rreq_id: int
    dest: NodeId
    dest_seq: int
    origin: NodeId
    origin_seq: int
    hop_count: int = 0
    join: bool = False
    repair: bool = False
    gratuitous: bool = False
    dest_only: bool = False
    packet_type: int = field(default=RREQ, init=False)

    def __post_init__(self) -> None:
        if self.hop_count < 0:
            raise ValueError("hop_count must be non-negative")

    def forwarded(self) -> "RreqMessage":
        return RreqMessage(
            self.rreq_id, self.dest, self.dest_seq, self.origin, self.origin_seq,
            self.hop_count + 1, self.join, self.repair, self.gratuitous, self.dest_only,
        )

    def flags(self) -> str:
        return "".join("1" if f else "0" for f in (self.join, self.repair, self.gratuitous, self.dest_only))

    @property
    def size(self) -> int:
        return CONTROL_BYTES["RREQ"]


@dataclass(frozen=True, slots=True)
class RrepMessage:
    dest: NodeId
    dest_seq: int
    origin: NodeId
    lifetime: int
    hop_count: int = 0
    repair: bool = False
    ack_required: bool = False
    prefix_size: int = 0
    packet_type: int = field(default=RREP, init=False)

    def __post_init__(self) -> None:
        if self.lifetime <= 0:
            raise ValueError("RREP lifetime must be positive")
        if not 0 <= self.prefix_size <= 31:
            raise ValueError("prefix_size must be in [0, 31]")
        if self.hop_count < 0:
            raise ValueError("hop_count must be non-negative")

    def forwarded(self) -> "RrepMessage":
        return RrepMessage(
            self.dest, self.dest_seq, self.origin, self.lifetime, self.hop_count + 1,
            self.repair, self.ack_required, self.prefix_size,
        )

    @property
    def size(self) -> int:
        return CONTROL_BYTES["RREP"]


@dataclass(frozen=True, slots=True)
class RerrMessage:
    unreachable: tuple[tuple[NodeId, int], ...]
    no_delete: bool = False
    packet_type: int = field(default=RERR, init=False)

    def __post_init__(self) -> None:
        if not self.unreachable:
            raise ValueError("RERR must list at least one unreachable destination")

    @property
    def dest_count(self) -> int:
        return len(self.unreachable)

    @property
    def size(self) -> int:
        return rerr_bytes(self.dest_count)


@dataclass(frozen=True, slots=True)
class RrepAckMessage:
    packet_type: int = field(default=RREP_ACK, init=False)

    @property
    def size(self) -> int:
        return CONTROL_BYTES["RREP_ACK"]


@dataclass(frozen=True, slots=True)
class HelloMessage:
    seq: int

    @property
    def size(self) -> int:
        return HELLO_BYTES


@dataclass(frozen=True, slots=True)
class DataPacket:
    uid: str
    src: NodeId
    dst: NodeId
    sent_at: int
    hops: int = 0

    @property
    def size(self) -> int:
        return DATA_PACKET_BYTES

    def hopped(self) -> "DataPacket":
        return DataPacket(self.uid, self.src, self.dst, self.sent_at, self.hops + 1)
