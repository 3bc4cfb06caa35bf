import math

from hypothesis import given
from hypothesis import strategies as st

from ecaaodv.sim.radio import neighbors


def test_exact_range_is_a_link():
    pos = {"a": (0.0, 0.0), "b": (30.0, 0.0), "c": (30.0001, 0.0)}
    assert neighbors(pos, "a", 30.0) == {"b"}


def test_square_corners_link_along_edges_only():
    pos = {"a": (0.0, 0.0), "b": (25.0, 25.0), "c": (0.0, 25.0), "d": (25.0, 0.0)}
    assert neighbors(pos, "a", 30.0) == {"c", "d"}  # diagonal is 35.4 m
    assert neighbors(pos, "c", 30.0) == {"a", "b"}
    assert neighbors(pos, "a", 36.0) == {"b", "c", "d"}
    assert neighbors(pos, "a", 36.0, {frozenset(("a", "b"))}) == {"c", "d"}


pts = st.dictionaries(
    st.text("abcdefgh", min_size=1, max_size=2),
    st.tuples(st.floats(0, 100), st.floats(0, 100)),
    min_size=1,
    max_size=12,
)


@given(pts, st.floats(0.1, 80))
def test_symmetric_and_matches_distance(pos, r):
    for a in pos:
        nb = neighbors(pos, a, r)
        assert a not in nb
        for b in pos:
            if b == a:
                continue
            d = math.dist(pos[a], pos[b])
            if abs(d - r) > 1e-9:
                assert (b in nb) == (d <= r)
            assert (b in nb) == (a in neighbors(pos, b, r))
