import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ecaaodv.sim.mobility import Area, MobilityParams, MobilityState, initial_state, mobility_step, static_state

AREA = Area(25.0, 25.0)


def test_straight_leg_interpolates():
    m = MobilityState((0.0, 0.0), (3.0, 4.0), 1.0)
    half = mobility_step(m, 2500, AREA, random.Random(0))
    assert half.pos == pytest.approx((1.5, 2.0))
    arrived = mobility_step(m, 5000, AREA, random.Random(0))
    assert arrived.pos == pytest.approx((3.0, 4.0))
    assert arrived.pause_until == pytest.approx(7000)
    assert m.pos == (0.0, 0.0)  # original untouched


def test_pause_holds_position():
    m = MobilityState((0.0, 0.0), (3.0, 4.0), 1.0)
    a = mobility_step(m, 5000, AREA, random.Random(0))
    b = mobility_step(a, 1500, AREA, random.Random(0))
    assert b.pos == a.pos


def test_static_and_zero_speed_never_move():
    m = static_state((7.0, 7.0))
    assert mobility_step(m, 10_000, AREA, random.Random(1)).pos == (7.0, 7.0)
    params = MobilityParams(0.0, 0.0, 0)
    m = initial_state(AREA, params, random.Random(2))
    assert mobility_step(m, 10_000, AREA, random.Random(2), params).pos == m.pos


def test_non_positive_step_rejected():
    with pytest.raises(ValueError):
        mobility_step(static_state((0.0, 0.0)), 0, AREA, random.Random(0))


def test_long_walk_stays_in_area():
    rng = random.Random(3)
    params = MobilityParams(0.5, 2.0, 0)
    m = initial_state(AREA, params, rng)
    for _ in range(100_000):
        m = mobility_step(m, 100, AREA, rng, params)
        assert AREA.contains(m.pos)


@given(st.integers(0, 2**32), st.floats(1, 100), st.floats(1, 100), st.lists(st.integers(1, 5000), max_size=30))
def test_positions_in_area_and_speed_bounded(seed, w, h, steps):
    area = Area(w, h)
    params = MobilityParams()
    rng = random.Random(seed)
    m = initial_state(area, params, rng)
    for dt in steps:
        nxt = mobility_step(m, dt, area, rng, params)
        assert area.contains(nxt.pos)
        moved = ((nxt.pos[0] - m.pos[0]) ** 2 + (nxt.pos[1] - m.pos[1]) ** 2) ** 0.5
        assert moved <= params.speed_max * dt / 1000 + 1e-9
        m = nxt
