import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecaaodv.aodv.eca_adapter import load_default_registry
from ecaaodv.harness.metrics import compute_metrics
from ecaaodv.harness.runner import run_scenario
from ecaaodv.harness.scenario import CbrSpec, ScenarioConfig
from ecaaodv.sim.trace import MalformedTrace
from oracles import recount


def test_pdr_from_counts():
    lines = [f"t={i} node=a ev=SEND uid=u{i}" for i in range(10)]
    lines += [f"t={i + 5} node=b ev=DELIVER uid=u{i}" for i in range(9)]
    res = compute_metrics(lines)
    assert res.pdr == pytest.approx(0.9)
    assert res.avg_latency_ms == 5.0
    assert res.data_bytes == 9 * 512


def test_control_bytes_by_type():
    lines = ["t=0 node=a ev=RREQ id=0", "t=2 node=b ev=RREQ id=0", "t=4 node=c ev=RREP dest=c"]
    res = compute_metrics(lines)
    assert res.ctrl_bytes == 2 * 24 + 20 == 68
    assert (res.rreq_count, res.rrep_count, res.messages) == (2, 1, 3)
    assert compute_metrics(["t=0 node=a ev=RERR n=3"]).ctrl_bytes == 4 + 3 * 8


def test_empty_trace_conventions():
    res = compute_metrics([])
    assert res.pdr == 0.0 and res.avg_latency_ms is None
    assert res.overhead_ratio is None and not res.overhead_defined


def test_malformed_inputs():
    with pytest.raises(MalformedTrace):
        compute_metrics(["t=1 node=a ev=DELIVER uid=ghost"])
    with pytest.raises(MalformedTrace):
        compute_metrics(["t=1 node=a ev=RERR"])


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 1000), st.sampled_from([0.0, 0.1, 0.3]), st.sampled_from(["aodv", "eca-aodv"]))
def test_metrics_agree_with_recount(seed, loss, protocol):
    cfg = ScenarioConfig(
        nodes=10, area_x=60, area_y=60, range_m=25, sim_time=8000, seed=seed, loss_p=loss,
        protocol=protocol, cbr_flows=CbrSpec(3, 500, 200, 20),
    )
    out = run_scenario(cfg, load_default_registry())
    ref = recount(out.trace.lines())
    res = out.result
    for key, value in ref.items():
        assert getattr(res, key) == value, key
    assert 0.0 <= res.pdr <= 1.0
    assert res.sent == res.delivered + res.dropped + res.buffered
