"""Rules, the rule registry and the rule-firing pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable

from .conditions import Attr, Condition, EvalContext, Literal, Operand, Probe
from .errors import (
    DuplicateRuleId,
    EcaError,
    RegistryFrozen,
    RegistryNotFrozen,
    UnresolvedDecisionName,
    UnresolvedProbe,
    UnresolvedReference,
)
from .types import AttributeValue, Event, EventType


@dataclass(frozen=True, slots=True)
class EventPattern:
    """Event-type match, optionally narrowed by attribute equalities."""

    event_type: EventType
    guards: tuple[tuple[str, AttributeValue], ...] = ()

    def matches(self, event: Event) -> bool:
        if event.event_type != self.event_type:
            return False
        get = event.get
        for name, want in self.guards:
            if get(name) != want:
                return False
        return True

    def __str__(self) -> str:
        if not self.guards:
            return str(self.event_type)
        return f"{self.event_type} WITH " + ",".join(f"{k}={v}" for k, v in self.guards)


@dataclass(frozen=True, slots=True)
class PrepStep:
    """``counter += amount``, run before the rule's condition."""

    counter: str
    amount: int = 1

    def apply(self, ctx: EvalContext) -> None:
        try:
            ctx.counters[self.counter] += self.amount
        except KeyError:
            raise UnresolvedReference(f"no counter named {self.counter!r} in context") from None


@dataclass(frozen=True, slots=True)
class DecisionTemplate:
    name: str
    args: tuple[tuple[str, Operand], ...] = ()


@dataclass(frozen=True, slots=True)
class Decision:
    name: str
    args: tuple[tuple[str, Any], ...] = ()
    rule_id: str = ""

    def arg(self, key: str, default: Any = None) -> Any:
        for k, v in self.args:
            if k == key:
                return v
        return default


@dataclass(frozen=True)
class ActionSpec:
    action_id: str
    event_ref: str
    condition_result_label: str
    decisions: tuple[DecisionTemplate, ...]

    @property
    def decision(self) -> DecisionTemplate:
        return self.decisions[0]


@dataclass(frozen=True)
class Rule:
    rule_id: str
    when: EventPattern
    preparation: tuple[PrepStep, ...]
    if_: Condition
    then_: ActionSpec

    def probes(self) -> set[str]:
        names = set(self.if_.probes)
        for tmpl in self.then_.decisions:
            names.update(ref.name for _, ref in tmpl.args if isinstance(ref, Probe))
        return names


@dataclass
class RuleRegistry:
    """Ordered rule set; frozen before use.

    ``actions`` and ``probes`` describe the host vocabulary.  ``None`` for
    ``actions`` accepts any decision name.
    """

    actions: frozenset[str] | None = None
    probes: frozenset[str] = frozenset()
    rules: list[Rule] = field(default_factory=list)
    frozen: bool = False
    _by_type: dict[EventType, list[Rule]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.actions is not None:
            self.actions = frozenset(self.actions)
        self.probes = frozenset(self.probes)

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def get(self, rule_id: str) -> Rule | None:
        for r in self.rules:
            if r.rule_id == rule_id:
                return r
        return None

    def freeze(self) -> "RuleRegistry":
        """Resolve every probe name, then lock the registry."""
        if self.frozen:
            return self
        for rule in self.rules:
            unknown = rule.probes() - self.probes
            if unknown:
                err = UnresolvedProbe(f"undeclared probe(s) {sorted(unknown)}")
                err.rule_id = rule.rule_id
                raise err
        index: dict[EventType, list[Rule]] = {}
        for rule in self.rules:
            index.setdefault(rule.when.event_type, []).append(rule)
        self._by_type = index
        self.frozen = True
        return self

    def matching(self, event: Event) -> list[Rule]:
        return [r for r in self._by_type.get(event.event_type, ()) if r.when.matches(event)]

    def without(self, *rule_ids: str) -> "RuleRegistry":
        """Fresh frozen registry with the named rules dropped."""
        out = RuleRegistry(self.actions, self.probes)
        for rule in self.rules:
            if rule.rule_id not in rule_ids:
                register_rule(out, rule)
        return out.freeze()


def register_rule(registry: RuleRegistry, rule: Rule) -> int:
    """Append ``rule``; returns its position (the rule handle)."""
    if registry.frozen:
        raise RegistryFrozen(f"cannot register {rule.rule_id}: registry is frozen")
    if any(r.rule_id == rule.rule_id for r in registry.rules):
        raise DuplicateRuleId(f"rule id {rule.rule_id!r} already registered")
    if registry.actions is not None:
        for tmpl in rule.then_.decisions:
            if tmpl.name not in registry.actions:
                err = UnresolvedDecisionName(f"decision {tmpl.name!r} is not in the host vocabulary")
                err.rule_id = rule.rule_id
                raise err
    registry.rules.append(rule)
    return len(registry.rules) - 1


def _bind(ref: Operand, event: Event, ctx: EvalContext) -> Any:
    if isinstance(ref, Literal):
        return ref.value.to_python()
    if isinstance(ref, Attr):
        av = event.get(ref.name)
        if av is None:
            raise UnresolvedReference(f"event has no attribute {ref.name!r}")
        return av.to_python()
    value = ctx.probe(ref.name)
    return value.to_python() if isinstance(value, AttributeValue) else value


def process_event(
    event: Event,
    registry: RuleRegistry,
    ctx: EvalContext,
    run_preparation: bool = True,
) -> list[Decision]:
    """Fire every matching rule in registration order.

    For each rule whose pattern matches: run its preparation steps, then
    evaluate its condition; a true condition contributes the rule's
    decisions.  Rules whose condition is false contribute nothing.
    """
    if not registry.frozen:
        raise RegistryNotFrozen("freeze the registry before processing events")
    out: list[Decision] = []
    rule = None
    try:
        for rule in registry._by_type.get(event.event_type, ()):
            if not rule.when.matches(event):
                continue
            if run_preparation:
                for step in rule.preparation:
                    step.apply(ctx)
            if not rule.if_.holds(event, ctx):
                continue
            for tmpl in rule.then_.decisions:
                args = tuple((k, _bind(ref, event, ctx)) for k, ref in tmpl.args)
                out.append(Decision(tmpl.name, args, rule.rule_id))
    except EcaError as exc:
        if exc.rule_id is None and rule is not None:
            exc.rule_id = rule.rule_id
        raise
    return out


def make_rule(
    rule_id: str,
    when: EventType | EventPattern,
    expr,
    decisions: Iterable[DecisionTemplate] | DecisionTemplate,
    *,
    preparation: Iterable[PrepStep] = (),
    label: str = "",
) -> Rule:
    """Convenience constructor wiring condition/action ids from ``rule_id``."""
    pattern = when if isinstance(when, EventPattern) else EventPattern(when)
    if isinstance(decisions, DecisionTemplate):
        decisions = (decisions,)
    decisions = tuple(decisions)
    cond = Condition.build(f"C_{rule_id}", pattern.event_type, expr, label)
    action = ActionSpec(f"A_{rule_id}", str(pattern), label, decisions)
    return Rule(rule_id, pattern, tuple(preparation), cond, action)
