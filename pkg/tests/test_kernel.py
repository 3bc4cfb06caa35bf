import pytest
from hypothesis import given
from hypothesis import strategies as st

from ecaaodv.sim.kernel import EventQueue, SchedulePast


def test_fifo_within_same_instant():
    q = EventQueue()
    q.schedule(5, "b", 1)
    q.schedule(5, "b", 2)
    q.schedule(1, "a")
    assert [(e.at, e.payload) for e in (q.pop(), q.pop(), q.pop())] == [(1, None), (5, 1), (5, 2)]
    assert not q and q.peek_time() is None


def test_schedule_in_past_rejected():
    q = EventQueue()
    q.schedule(10, "x")
    q.pop()
    assert q.now == 10
    with pytest.raises(SchedulePast):
        q.schedule(9, "y")
    q.schedule(10, "same instant is fine")


@given(st.lists(st.integers(0, 1000), max_size=200))
def test_pop_order_is_nondecreasing_and_stable(times):
    q = EventQueue()
    seqs = [q.schedule(t, "k", i) for i, t in enumerate(times)]
    assert seqs == sorted(seqs)
    out = [q.pop() for _ in times]
    assert [(e.at, e.payload) for e in out] == sorted((t, i) for i, t in enumerate(times))
    assert len(q.pending()) == 0
