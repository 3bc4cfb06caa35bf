"""Line-oriented rule files.

One rule per logical line (a trailing ``\\`` joins the next line)::

    RULE <id> WHEN <event-type> [WITH <attr>=<lit>,...] [PREP <name> += <int>]*
         IF <expr> THEN <decision>(<arg>=<attr-or-literal>,...)[; <decision>(...)]*
         [LABEL "<result text>"]

``<expr>`` combines comparisons (``== != < <= > >=``) with ``&& || !`` and
parentheses; ``EXISTS(<probe>)`` tests a boolean context probe.  Literals:
integers, ``true``/``false``, double-quoted strings, dotted-quad addresses,
durations (``25ms``, ``2s``) and times of day (``13:00``).  A bare name is a
context probe when the host declares it, otherwise an event attribute.
"""

from __future__ import annotations

import ipaddress
import re
from dataclasses import dataclass
from typing import Iterable

from ..eca.conditions import (
    And,
    Attr,
    Compare,
    ConditionExpr,
    Literal,
    Not,
    Op,
    Or,
    Probe,
    render,
)
from ..eca.errors import EcaError, UnresolvedProbe
from ..eca.rules import DecisionTemplate, EventPattern, PrepStep, Rule, RuleRegistry, make_rule, register_rule
from ..eca.types import AttributeValue, DataType, EventType


class RuleSyntaxError(EcaError):
    def __init__(self, line: int, reason: str) -> None:
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


@dataclass(frozen=True)
class RuleHost:
    """What a host exposes to rule files: decision names and probe names."""

    actions: frozenset[str]
    probes: frozenset[str]


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<ip>\d{1,3}\.\d{1,3}\.\d{1,3}\.\d{1,3}(?![\w.]))
  | (?P<tod>\d{1,2}:\d{2}(?!\w))
  | (?P<dur>\d+(?:ms|s)(?!\w))
  | (?P<int>-?\d+(?!\w))
  | (?P<op>&&|\|\||==|!=|<=|>=|\+=|[<>!(),;=])
  | (?P<name>[A-Za-z_]\w*(?::\w[\w\-]*)?)
    """,
    re.VERBOSE,
)

_KEYWORDS = {"RULE", "WHEN", "WITH", "PREP", "IF", "THEN", "LABEL", "EXISTS"}
_OPS = {"==": Op.EQ, "!=": Op.NE, "<": Op.LT, "<=": Op.LE, ">": Op.GT, ">=": Op.GE}
_FLIP = {Op.EQ: Op.EQ, Op.NE: Op.NE, Op.LT: Op.GT, Op.LE: Op.GE, Op.GT: Op.LT, Op.GE: Op.LE}


def _tokenize(text: str, line: int) -> list[tuple[str, str]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise RuleSyntaxError(line, f"unexpected character {text[pos]!r} at column {pos + 1}")
        pos = m.end()
        if m.lastgroup != "ws":
            out.append((m.lastgroup, m.group()))
    return out


class _Parser:
    def __init__(self, tokens: list[tuple[str, str]], line: int, host: RuleHost) -> None:
        self.toks = tokens
        self.i = 0
        self.line = line
        self.host = host

    def fail(self, reason: str) -> RuleSyntaxError:
        return RuleSyntaxError(self.line, reason)

    def peek(self) -> tuple[str, str] | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self) -> tuple[str, str]:
        tok = self.peek()
        if tok is None:
            raise self.fail("unexpected end of rule")
        self.i += 1
        return tok

    def at(self, value: str) -> bool:
        tok = self.peek()
        return tok is not None and tok[1] == value and tok[0] in ("op", "name")

    def expect(self, value: str) -> None:
        kind, text = self.next()
        if text != value:
            raise self.fail(f"expected {value!r}, found {text!r}")

    def ident(self, what: str) -> str:
        kind, text = self.next()
        if kind != "name" or text in _KEYWORDS:
            raise self.fail(f"expected {what}, found {text!r}")
        return text

    # -- rule ---------------------------------------------------------------

    def rule(self) -> Rule:
        self.expect("RULE")
        rule_id = self.ident("rule id")
        self.expect("WHEN")
        etext = self.ident("event type")
        try:
            etype = EventType.parse(etext)
        except ValueError as exc:
            raise self.fail(str(exc)) from None
        guards = []
        if self.at("WITH"):
            self.next()
            while True:
                name = self.ident("attribute name")
                self.expect("=")
                guards.append((name, self.literal()))
                if not self.at(","):
                    break
                self.next()
        prep = []
        while self.at("PREP"):
            self.next()
            counter = self.ident("counter name")
            self.expect("+=")
            kind, text = self.next()
            if kind != "int":
                raise self.fail(f"PREP increment must be an integer, found {text!r}")
            prep.append(PrepStep(counter, int(text)))
        self.expect("IF")
        expr = self.expr()
        self.expect("THEN")
        decisions = [self.decision()]
        while self.at(";"):
            self.next()
            decisions.append(self.decision())
        label = ""
        if self.at("LABEL"):
            self.next()
            kind, text = self.next()
            if kind != "string":
                raise self.fail("LABEL needs a quoted string")
            label = _unquote(text)
        if self.peek() is not None:
            raise self.fail(f"trailing input {self.peek()[1]!r}")
        return make_rule(rule_id, EventPattern(etype, tuple(guards)), expr, decisions, preparation=prep, label=label)

    def decision(self) -> DecisionTemplate:
        name = self.ident("decision name")
        self.expect("(")
        args = []
        if not self.at(")"):
            while True:
                key = self.ident("argument name")
                self.expect("=")
                args.append((key, self.operand()))
                if not self.at(","):
                    break
                self.next()
        self.expect(")")
        return DecisionTemplate(name, tuple(args))

    # -- expressions --------------------------------------------------------

    def expr(self) -> ConditionExpr:
        left = self.conj()
        while self.at("||"):
            self.next()
            left = Or(left, self.conj())
        return left

    def conj(self) -> ConditionExpr:
        left = self.unary()
        while self.at("&&"):
            self.next()
            left = And(left, self.unary())
        return left

    def unary(self) -> ConditionExpr:
        if self.at("!"):
            self.next()
            return Not(self.unary())
        if self.at("("):
            self.next()
            inner = self.expr()
            self.expect(")")
            return inner
        if self.at("EXISTS"):
            self.next()
            self.expect("(")
            name = self.ident("probe name")
            self.expect(")")
            if name not in self.host.probes:
                err = UnresolvedProbe(f"line {self.line}: EXISTS({name}) names an undeclared probe")
                raise err
            return Compare(Probe(name), Op.TEST)
        left = self.operand()
        kind, text = self.next()
        if text not in _OPS:
            raise self.fail(f"expected comparison operator, found {text!r}")
        op = _OPS[text]
        right = self.operand()
        if isinstance(left, Literal):
            if isinstance(right, Literal):
                raise self.fail("comparison needs at least one attribute or probe")
            left, right, op = right, left, _FLIP[op]
        return Compare(left, op, right)

    def operand(self) -> Attr | Probe | Literal:
        kind, text = self.peek() or ("", "")
        if kind == "name" and text not in ("true", "false") and text not in _KEYWORDS:
            self.next()
            return Probe(text) if text in self.host.probes else Attr(text)
        return Literal(self.literal())

    def literal(self) -> AttributeValue:
        kind, text = self.next()
        if kind == "int":
            return AttributeValue(DataType.INT, int(text))
        if kind == "string":
            return AttributeValue(DataType.TEXT, _unquote(text))
        if kind == "ip":
            try:
                return AttributeValue(DataType.IP, ipaddress.IPv4Address(text))
            except ValueError:
                raise self.fail(f"bad address {text!r}") from None
        if kind == "dur":
            ms = int(text[:-2]) if text.endswith("ms") else int(text[:-1]) * 1000
            return AttributeValue(DataType.DURATION, ms)
        if kind == "tod":
            hh, mm = text.split(":")
            if int(hh) > 23 or int(mm) > 59:
                raise self.fail(f"bad time of day {text!r}")
            return AttributeValue(DataType.DURATION, (int(hh) * 60 + int(mm)) * 60_000)
        if kind == "name" and text in ("true", "false"):
            return AttributeValue(DataType.BOOL, text == "true")
        raise self.fail(f"expected a literal, found {text!r}")


def _unquote(text: str) -> str:
    return re.sub(r"\\(.)", r"\1", text[1:-1])


def _logical_lines(text: str) -> Iterable[tuple[int, str]]:
    buf: list[str] = []
    start = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw).rstrip()
        if not buf:
            start = lineno
        if line.endswith("\\"):
            buf.append(line[:-1])
            continue
        buf.append(line)
        joined = " ".join(buf).strip()
        buf = []
        if joined:
            yield start, joined
    if buf and " ".join(buf).strip():
        yield start, " ".join(buf).strip()


def _strip_comment(line: str) -> str:
    in_str = False
    for i, ch in enumerate(line):
        if ch == '"' and (i == 0 or line[i - 1] != "\\"):
            in_str = not in_str
        elif ch == "#" and not in_str:
            return line[:i]
    return line


def parse_rule(line: str, host: RuleHost, lineno: int = 1) -> Rule:
    return _Parser(_tokenize(line, lineno), lineno, host).rule()


def parse_rules(text: str, host: RuleHost) -> RuleRegistry:
    """Parse a rule file into a frozen registry resolved against ``host``."""
    registry = RuleRegistry(actions=host.actions, probes=host.probes)
    for lineno, line in _logical_lines(text):
        rule = parse_rule(line, host, lineno)
        try:
            register_rule(registry, rule)
        except EcaError as exc:
            raise type(exc)(f"line {lineno}: {exc}") from None
    return registry.freeze()


def render_rule(rule: Rule) -> str:
    """Inverse of :func:`parse_rule` (modulo whitespace and parentheses)."""
    parts = [f"RULE {rule.rule_id} WHEN {rule.when.event_type}"]
    if rule.when.guards:
        parts.append("WITH " + ",".join(f"{k}={_lit(v)}" for k, v in rule.when.guards))
    parts += [f"PREP {p.counter} += {p.amount}" for p in rule.preparation]
    parts.append(f"IF {render(rule.if_.expr)}")
    calls = []
    for d in rule.then_.decisions:
        args = ",".join(f"{k}={_lit(v.value) if isinstance(v, Literal) else v.name}" for k, v in d.args)
        calls.append(f"{d.name}({args})")
    parts.append("THEN " + "; ".join(calls))
    if rule.if_.result_label:
        label = rule.if_.result_label.replace("\\", "\\\\").replace('"', '\\"')
        parts.append(f'LABEL "{label}"')
    return " ".join(parts)


def _lit(av: AttributeValue) -> str:
    if av.type is DataType.TEXT:
        return '"' + av.value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if av.type is DataType.BOOL:
        return "true" if av.value else "false"
    return str(av)
