"""Condition expressions and their evaluation.

Conditions are pure: evaluating one reads event attributes and context
probes but never writes to the context.  Counter mutation lives in rule
preparation steps (see :mod:`ecaaodv.eca.rules`).
"""

from __future__ import annotations

import enum
import operator
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Any, Callable, Iterator, Mapping, Union

from .errors import IncomparableTypes, TypeMismatch, UnresolvedReference
from .types import AttributeValue, DataType, Event, EventType


class Op(enum.Enum):
    EQ = "=="
    NE = "!="
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="
    TEST = "?:"


_ORDERING = {Op.LT: operator.lt, Op.LE: operator.le, Op.GT: operator.gt, Op.GE: operator.ge}
_ORDERABLE = frozenset({"num", "datetime", "duration"})


@dataclass(frozen=True, slots=True)
class Attr:
    """Reference to an attribute of the triggering event."""

    name: str


@dataclass(frozen=True, slots=True)
class Probe:
    """Reference to a host-supplied context probe."""

    name: str


@dataclass(frozen=True, slots=True)
class Literal:
    value: AttributeValue


Operand = Union[Attr, Probe, Literal]


@dataclass(frozen=True, slots=True)
class Compare:
    argument: Attr | Probe
    op: Op
    operand: Operand | None = None

    def __post_init__(self) -> None:
        if self.op is Op.TEST:
            if not isinstance(self.argument, Probe) or self.operand is not None:
                raise ValueError("TEST takes a single probe argument")
        elif self.operand is None:
            raise ValueError(f"{self.op.name} needs an operand")


@dataclass(frozen=True, slots=True)
class And:
    left: "ConditionExpr"
    right: "ConditionExpr"


@dataclass(frozen=True, slots=True)
class Or:
    left: "ConditionExpr"
    right: "ConditionExpr"


@dataclass(frozen=True, slots=True)
class Not:
    inner: "ConditionExpr"


ConditionExpr = Union[Compare, And, Or, Not]


def test(probe: str) -> Compare:
    return Compare(Probe(probe), Op.TEST)


def walk_refs(expr: ConditionExpr) -> Iterator[Attr | Probe]:
    if isinstance(expr, Compare):
        yield expr.argument
        if isinstance(expr.operand, (Attr, Probe)):
            yield expr.operand
    elif isinstance(expr, (And, Or)):
        yield from walk_refs(expr.left)
        yield from walk_refs(expr.right)
    elif isinstance(expr, Not):
        yield from walk_refs(expr.inner)
    else:
        raise TypeError(f"not a condition expression: {expr!r}")


@dataclass
class EvalContext:
    """Host state visible to conditions.

    ``probes`` are zero-argument callables; ``counters`` are the named
    integers that preparation steps may bump.
    """

    probes: Mapping[str, Callable[[], Any]] = field(default_factory=dict)
    counters: dict[str, int] = field(default_factory=dict)

    def probe(self, name: str) -> Any:
        try:
            fn = self.probes[name]
        except KeyError:
            raise UnresolvedReference(f"no probe named {name!r} in context") from None
        return fn()


@dataclass(frozen=True, slots=True)
class EventDetails:
    event_type: EventType | None
    required: tuple[str, ...] = ()


@dataclass(frozen=True, slots=True)
class ConditionResult:
    holds: bool
    label: str | None

    def __bool__(self) -> bool:
        return self.holds


@dataclass(frozen=True)
class Condition:
    condition_id: str
    event_details: EventDetails
    expr: ConditionExpr
    result_label: str = ""
    _fn: Callable = field(default=None, init=False, repr=False, compare=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        attrs = {r.name for r in walk_refs(self.expr) if isinstance(r, Attr)}
        missing = attrs - set(self.event_details.required)
        if missing:
            raise UnresolvedReference(
                f"condition {self.condition_id} references {sorted(missing)} not in its event details"
            )
        object.__setattr__(self, "_fn", compile_expr(self.expr))

    @classmethod
    def build(cls, condition_id: str, event_type: EventType | None, expr: ConditionExpr, label: str = "") -> "Condition":
        """Derive the required attribute list from the expression."""
        required = tuple(dict.fromkeys(r.name for r in walk_refs(expr) if isinstance(r, Attr)))
        return cls(condition_id, EventDetails(event_type, required), expr, label)

    @property
    def probes(self) -> frozenset[str]:
        return frozenset(r.name for r in walk_refs(self.expr) if isinstance(r, Probe))

    def holds(self, event: Event, ctx: EvalContext) -> bool:
        return self._fn(event, ctx)


def evaluate_condition(cond: Condition, event: Event, ctx: EvalContext) -> ConditionResult:
    """Truth value of ``cond`` for ``event`` under ``ctx``; label set when true."""
    ok = cond.holds(event, ctx)
    return ConditionResult(ok, cond.result_label if ok else None)


# -- evaluation ------------------------------------------------------------


def _classify(value: Any) -> tuple[str, Any]:
    if isinstance(value, AttributeValue):
        t = value.type
        if t is DataType.INT:
            return "num", value.value
        if t is DataType.DURATION:
            return "duration", value.value
        return t.name.lower(), value.value
    if isinstance(value, bool):
        return "bool", value
    if isinstance(value, (int, float)):
        return "num", value
    if isinstance(value, timedelta):
        return "duration", value // timedelta(milliseconds=1)
    if isinstance(value, datetime):
        return "datetime", value
    if isinstance(value, str):
        return "text", value
    return AttributeValue.infer(value).type.name.lower(), value


def _resolver(ref: Operand) -> Callable[[Event, EvalContext], tuple[str, Any]]:
    if isinstance(ref, Literal):
        const = _classify(ref.value)
        return lambda event, ctx: const
    if isinstance(ref, Attr):
        name = ref.name

        def attr(event: Event, ctx: EvalContext) -> tuple[str, Any]:
            av = event._index.get(name)
            if av is None:
                raise UnresolvedReference(f"event has no attribute {name!r}")
            return _classify(av)

        return attr
    name = ref.name
    return lambda event, ctx: _classify(ctx.probe(name))


def _compile_compare(node: Compare) -> Callable[[Event, EvalContext], bool]:
    if node.op is Op.TEST:
        name = node.argument.name

        def test_probe(event: Event, ctx: EvalContext) -> bool:
            v = ctx.probe(name)
            if not isinstance(v, bool):
                raise TypeMismatch(f"probe {name!r} returned {v!r}, TEST needs a bool")
            return v

        return test_probe

    left = _resolver(node.argument)
    right = _resolver(node.operand)  # type: ignore[arg-type]
    op = node.op
    desc = f"{_ref_text(node.argument)} {op.value} {_ref_text(node.operand)}"
    if op in (Op.EQ, Op.NE):
        want = op is Op.EQ

        def equality(event: Event, ctx: EvalContext) -> bool:
            lk, lv = left(event, ctx)
            rk, rv = right(event, ctx)
            if lk != rk:
                raise IncomparableTypes(f"{desc}: {lk} vs {rk}")
            return (lv == rv) is want

        return equality

    cmp = _ORDERING[op]

    def ordering(event: Event, ctx: EvalContext) -> bool:
        lk, lv = left(event, ctx)
        rk, rv = right(event, ctx)
        if lk != rk or lk not in _ORDERABLE:
            raise IncomparableTypes(f"{desc}: cannot order {lk} against {rk}")
        return cmp(lv, rv)

    return ordering


def compile_expr(expr: ConditionExpr) -> Callable[[Event, EvalContext], bool]:
    if isinstance(expr, Compare):
        return _compile_compare(expr)
    if isinstance(expr, And):
        a, b = compile_expr(expr.left), compile_expr(expr.right)
        return lambda event, ctx: a(event, ctx) and b(event, ctx)
    if isinstance(expr, Or):
        a, b = compile_expr(expr.left), compile_expr(expr.right)
        return lambda event, ctx: a(event, ctx) or b(event, ctx)
    if isinstance(expr, Not):
        inner = compile_expr(expr.inner)
        return lambda event, ctx: not inner(event, ctx)
    raise TypeError(f"not a condition expression: {expr!r}")


def _ref_text(ref: Operand | None) -> str:
    if isinstance(ref, Literal):
        return str(ref.value)
    if ref is None:
        return ""
    return ref.name


def render(expr: ConditionExpr) -> str:
    """Rule-file text for an expression (fully parenthesised)."""
    if isinstance(expr, Compare):
        if expr.op is Op.TEST:
            return f"EXISTS({expr.argument.name})"
        return f"{_ref_text(expr.argument)} {expr.op.value} {_literal_text(expr.operand)}"
    if isinstance(expr, And):
        return f"({render(expr.left)} && {render(expr.right)})"
    if isinstance(expr, Or):
        return f"({render(expr.left)} || {render(expr.right)})"
    if isinstance(expr, Not):
        return f"!({render(expr.inner)})"
    raise TypeError(expr)


def _literal_text(ref: Operand | None) -> str:
    if isinstance(ref, Literal):
        av = ref.value
        if av.type is DataType.TEXT:
            return '"' + av.value.replace("\\", "\\\\").replace('"', '\\"') + '"'
        if av.type is DataType.BOOL:
            return "true" if av.value else "false"
        return str(av)
    return _ref_text(ref)
