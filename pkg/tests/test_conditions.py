import copy

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ecaaodv.eca import (
    REQUEST,
    And,
    Attr,
    AttributeValue,
    Classifier,
    Compare,
    Condition,
    DataType,
    EvalContext,
    EventDetails,
    Literal,
    Not,
    Occurrence,
    Op,
    Or,
    Probe,
    classify_event,
    evaluate_condition,
)
from ecaaodv.eca import conditions
from ecaaodv.eca.errors import IncomparableTypes, TypeMismatch, UnresolvedReference

CLS = Classifier({"k": REQUEST})


def ev(**fields):
    return classify_event(Occurrence("k", fields), CLS)


def lit(v):
    return Literal(AttributeValue.infer(v))


def test_probe_test_operator_with_negation():
    cond = Condition.build("C1", REQUEST, Not(conditions.test("valid_route")), "no route")
    res = evaluate_condition(cond, ev(), EvalContext({"valid_route": lambda: False}))
    assert res.holds and res.label == "no route"
    res = evaluate_condition(cond, ev(), EvalContext({"valid_route": lambda: True}))
    assert not res and res.label is None


def test_attribute_against_attribute():
    cond = Condition.build("C2", REQUEST, Compare(Attr("dest_seq"), Op.GT, Attr("rreq_dest_seq")))
    assert evaluate_condition(cond, ev(dest_seq=14, rreq_dest_seq=13), EvalContext()).holds
    assert not evaluate_condition(cond, ev(dest_seq=13, rreq_dest_seq=13), EvalContext()).holds


def test_probe_threshold():
    cond = Condition.build("C3", None, Compare(Probe("temperature"), Op.GE, lit(30)))
    assert not evaluate_condition(cond, ev(), EvalContext({"temperature": lambda: 25})).holds
    assert evaluate_condition(cond, ev(), EvalContext({"temperature": lambda: 30.0})).holds


def test_incomparable_and_mismatch():
    cond = Condition.build("C4", REQUEST, Compare(Attr("a"), Op.LT, lit(True)))
    with pytest.raises(IncomparableTypes):
        evaluate_condition(cond, ev(a=False), EvalContext())
    cond = Condition.build("C5", REQUEST, Compare(Attr("a"), Op.EQ, lit("x")))
    with pytest.raises(IncomparableTypes):
        evaluate_condition(cond, ev(a=1), EvalContext())
    cond = Condition.build("C6", REQUEST, conditions.test("p"))
    with pytest.raises(TypeMismatch):
        evaluate_condition(cond, ev(), EvalContext({"p": lambda: 1}))


def test_unresolved_references():
    cond = Condition.build("C7", REQUEST, Compare(Attr("missing"), Op.EQ, lit(1)))
    with pytest.raises(UnresolvedReference):
        evaluate_condition(cond, ev(), EvalContext())
    cond = Condition.build("C8", REQUEST, conditions.test("nope"))
    with pytest.raises(UnresolvedReference):
        evaluate_condition(cond, ev(), EvalContext())


def test_condition_requires_declared_attributes():
    with pytest.raises(UnresolvedReference):
        Condition("C9", EventDetails(REQUEST, ("a",)), Compare(Attr("b"), Op.EQ, lit(1)))


def test_test_operator_shape():
    with pytest.raises(ValueError):
        Compare(Attr("a"), Op.TEST)
    with pytest.raises(ValueError):
        Compare(Probe("a"), Op.EQ)


def test_text_and_ip_equality():
    cond = Condition.build("C10", REQUEST, Compare(Attr("ip"), Op.EQ, Literal(AttributeValue.coerce(DataType.IP, "10.0.0.1"))))
    assert evaluate_condition(cond, classify_event(Occurrence("k", {"ip": "10.0.0.1"}), Classifier({"k": REQUEST}, {"ip": DataType.IP})), EvalContext()).holds


# random expression trees over two int attributes and one bool probe
leaf = st.one_of(
    st.builds(lambda op, v: Compare(Attr("x"), op, lit(v)), st.sampled_from([Op.EQ, Op.NE, Op.LT, Op.LE, Op.GT, Op.GE]), st.integers(-5, 5)),
    st.just(conditions.test("flag")),
)
exprs = st.recursive(
    leaf,
    lambda inner: st.one_of(st.builds(And, inner, inner), st.builds(Or, inner, inner), st.builds(Not, inner)),
    max_leaves=12,
)


def reference(expr, x, flag):
    if isinstance(expr, Compare):
        if expr.op is Op.TEST:
            return flag
        v = expr.operand.value.value
        return {"==": x == v, "!=": x != v, "<": x < v, "<=": x <= v, ">": x > v, ">=": x >= v}[expr.op.value]
    if isinstance(expr, And):
        return reference(expr.left, x, flag) and reference(expr.right, x, flag)
    if isinstance(expr, Or):
        return reference(expr.left, x, flag) or reference(expr.right, x, flag)
    return not reference(expr.inner, x, flag)


@given(exprs, st.integers(-6, 6), st.booleans())
def test_evaluation_matches_reference_and_is_pure(expr, x, flag):
    cond = Condition.build("C", REQUEST, expr)
    ctx = EvalContext({"flag": lambda: flag}, {"seq": 3})
    before = copy.deepcopy(ctx.counters)
    e = ev(x=x)
    first = evaluate_condition(cond, e, ctx).holds
    assert first == reference(expr, x, flag)
    assert evaluate_condition(cond, e, ctx).holds == first
    assert ctx.counters == before


def test_render_is_parenthesised():
    expr = Or(Not(conditions.test("a")), And(Compare(Attr("x"), Op.GT, lit(1)), Compare(Attr("s"), Op.EQ, lit("q"))))
    assert conditions.render(expr) == '(!(EXISTS(a)) || (x > 1 && s == "q"))'
