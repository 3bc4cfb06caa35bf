from ecaaodv.harness.csvout import COLUMNS, MATCH_COLUMN, cell, read_csv, render_csv, write_csv
from ecaaodv.harness.metrics import RunResult


def sample():
    return RunResult(
        run_id="aodv-n5-s1", protocol="aodv", nodes=5, seed=1, pdr=0.1 + 0.2,
        avg_latency_ms=None, ctrl_bytes=68, data_bytes=0, overhead_ratio=None,
        events_per_sec=1234.5, trace_digest="ab" * 32,
    )


def test_header_and_cells():
    text = render_csv([sample()])
    head, row, end = text.split("\n")
    assert head.split(",") == list(COLUMNS) and end == ""
    assert row.split(",")[4] == "0.30000000000000004"
    assert row.split(",")[5] == ""  # no latency
    assert cell(True) == "true" and cell(None) == "" and cell(3) == "3"
    assert render_csv([]) == ",".join(COLUMNS) + "\n"


def test_round_trip(tmp_path):
    path = tmp_path / "r.csv"
    row = {c: getattr(sample(), c) for c in COLUMNS}
    row[MATCH_COLUMN] = True
    n = write_csv([row], path, COLUMNS + (MATCH_COLUMN,))
    assert n == path.stat().st_size and b"\r" not in path.read_bytes()
    (back,) = read_csv(path)
    assert back == row
