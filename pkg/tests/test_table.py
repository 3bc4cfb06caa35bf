import pytest
from hypothesis import given
from hypothesis import strategies as st

from ecaaodv.aodv.messages import UNKNOWN_SEQ
from ecaaodv.aodv.table import RouteCandidate, RouteEntry, RoutingTable, UpdateResult, is_fresher, update_route
from oracles import FreshnessReference

D = "10.0.0.9"


def test_install_refresh_reject():
    t = RoutingTable()
    assert update_route(t, D, RouteCandidate("10.0.0.2", 3, 13, 100), 0) is UpdateResult.INSTALLED
    assert update_route(t, D, RouteCandidate("10.0.0.3", 2, 13, 100), 10) is UpdateResult.REFRESHED
    assert t.get(D).next_hop == "10.0.0.3" and t.get(D).expires_at == 110
    assert update_route(t, D, RouteCandidate("10.0.0.4", 2, 13, 100), 20) is UpdateResult.REJECTED
    t.get(D).dest_seq = 14
    assert update_route(t, D, RouteCandidate("10.0.0.4", 1, 13, 100), 20) is UpdateResult.REJECTED


def test_invalid_entry_replaced_at_equal_seq_only():
    stored = RouteEntry(D, "a", 3, 13, False, 0)
    assert is_fresher(stored, RouteCandidate("b", 5, 13, 1))
    assert not is_fresher(stored, RouteCandidate("b", 1, 12, 1))


def test_unknown_stored_seq_always_replaced():
    stored = RouteEntry(D, "a", 1, UNKNOWN_SEQ, True, 0)
    assert is_fresher(stored, RouteCandidate("b", 9, 0, 1))


def test_zero_lifetime_rejected():
    with pytest.raises(ValueError):
        update_route(RoutingTable(), D, RouteCandidate("a", 1, 1, 0), 0)


def test_valid_route_respects_expiry():
    t = RoutingTable()
    update_route(t, D, RouteCandidate("a", 1, 1, 50), 0)
    assert t.valid_route(D, 50) is not None
    assert t.valid_route(D, 51) is None


ops = st.lists(
    st.one_of(
        st.tuples(st.just("offer"), st.sampled_from("abc"), st.sampled_from("xyz"), st.integers(1, 6), st.integers(-1, 5)),
        st.tuples(st.just("invalidate"), st.sampled_from("abc")),
    ),
    max_size=40,
)


@given(ops)
def test_matches_reference_map(seq):
    t = RoutingTable()
    ref = FreshnessReference()
    last_seq = {}
    for op in seq:
        if op[0] == "offer":
            _, dest, nh, hops, s = op
            got = update_route(t, dest, RouteCandidate(nh, hops, s, 1000), 0)
            assert got.value == ref.offer(dest, nh, hops, s)
        else:
            dest = op[1]
            ref.invalidate(dest)
            if t.get(dest):
                t.get(dest).valid = False
        for dest, (s, hops, nh, valid) in ref.routes.items():
            e = t.get(dest)
            assert (e.dest_seq, e.hop_count, e.next_hop, e.valid) == (s, hops, nh, valid)
            if last_seq.get(dest, -1) != -1:
                assert e.dest_seq >= last_seq[dest]
            last_seq[dest] = e.dest_seq
