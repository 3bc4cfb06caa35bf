"""Pentuple state machine (alphabet, states, initial, transitions, finals)."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

from .errors import StateNotInMachine, UndefinedTransition
from .types import NOTIFICATION, REQUEST, EventType

TransitionKey = tuple[str, EventType, bool]


@dataclass(frozen=True)
class EcaStateMachine:
    alphabet: frozenset[EventType]
    states: frozenset[str]
    initial: str
    transitions: Mapping[TransitionKey, str]
    finals: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        # a dict key can only map to one target, so determinism holds by construction
        object.__setattr__(self, "transitions", dict(self.transitions))
        if self.initial not in self.states:
            raise ValueError(f"initial state {self.initial!r} not in S")
        if not self.finals <= self.states:
            raise ValueError(f"final states {sorted(self.finals - self.states)} not in S")
        for (src, etype, _), dst in self.transitions.items():
            if src not in self.states or dst not in self.states:
                raise ValueError(f"transition {src!r} -> {dst!r} leaves S")
            if etype not in self.alphabet:
                raise ValueError(f"transition input {etype} not in the alphabet")

    def reachable(self) -> set[str]:
        seen = {self.initial}
        todo = deque([self.initial])
        while todo:
            s = todo.popleft()
            for (src, _, _), dst in self.transitions.items():
                if src == s and dst not in seen:
                    seen.add(dst)
                    todo.append(dst)
        return seen


def step_state_machine(
    sm: EcaStateMachine, state: str, event_type: EventType, cond_outcome: bool
) -> tuple[str, bool]:
    """Next state for (state, event type, condition outcome) and whether it is final."""
    if state not in sm.states:
        raise StateNotInMachine(f"{state!r} is not a state of this machine")
    try:
        nxt = sm.transitions[(state, event_type, bool(cond_outcome))]
    except KeyError:
        raise UndefinedTransition(f"no transition from {state!r} on ({event_type}, {cond_outcome})") from None
    return nxt, nxt in sm.finals


def default_aodv_machine() -> EcaStateMachine:
    """Per-node routing state driven by the four AODV decision events.

    Request events (prepare RREQ, generate RREP, RREP-ACK) push a node from
    Idle into Discovering and on to Established; Notification (link break)
    moves an established node into Repairing until the next discovery.
    """
    states = frozenset({"Idle", "Discovering", "Established", "Repairing"})
    t: dict[TransitionKey, str] = {
        ("Idle", REQUEST, True): "Discovering",
        ("Idle", REQUEST, False): "Idle",
        ("Idle", NOTIFICATION, True): "Idle",
        ("Idle", NOTIFICATION, False): "Idle",
        ("Discovering", REQUEST, True): "Established",
        ("Discovering", REQUEST, False): "Discovering",
        ("Discovering", NOTIFICATION, True): "Repairing",
        ("Discovering", NOTIFICATION, False): "Discovering",
        ("Established", REQUEST, True): "Established",
        ("Established", REQUEST, False): "Established",
        ("Established", NOTIFICATION, True): "Repairing",
        ("Established", NOTIFICATION, False): "Established",
        ("Repairing", REQUEST, True): "Discovering",
        ("Repairing", REQUEST, False): "Repairing",
        ("Repairing", NOTIFICATION, True): "Repairing",
        ("Repairing", NOTIFICATION, False): "Repairing",
    }
    return EcaStateMachine(
        alphabet=frozenset({REQUEST, NOTIFICATION}),
        states=states,
        initial="Idle",
        transitions=t,
        finals=frozenset({"Established"}),
    )
