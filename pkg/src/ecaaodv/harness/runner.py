"""Run orchestration: single runs, protocol comparisons and node sweeps."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from ..aodv.drivers import BaselineDriver
from ..aodv.eca_adapter import EcaDriver
from ..eca import RuleRegistry
from ..sim.network import Simulation
from ..sim.trace import Trace
from .metrics import RunResult, compute_metrics
from .scenario import PROTOCOLS, ScenarioConfig


class MissingRules(ValueError):
    pass


@dataclass
class RunOutput:
    result: RunResult
    trace: Trace
    sim: Simulation


def run_id(protocol: str, nodes: int, seed: int) -> str:
    return f"{protocol}-n{nodes}-s{seed}"


def run_scenario(cfg: ScenarioConfig, registry: RuleRegistry | None = None) -> RunOutput:
    cfg.validate()
    if cfg.protocol == "eca-aodv":
        if registry is None:
            raise MissingRules("eca-aodv needs a rule registry")
        driver = EcaDriver(registry)
    else:
        driver = BaselineDriver()
    sim = Simulation(cfg.to_sim_params(), driver)
    t0 = time.perf_counter()
    sim.run_until(cfg.sim_time)
    sim.finish(cfg.sim_time)
    wall = time.perf_counter() - t0
    res = compute_metrics(sim.trace.lines())
    res.run_id = run_id(cfg.protocol, cfg.nodes, cfg.seed)
    res.protocol = cfg.protocol
    res.nodes = cfg.nodes
    res.seed = cfg.seed
    res.sim_events = sim.stats.processed
    res.events_per_sec = sim.stats.processed / wall if wall > 0 else float(sim.stats.processed)
    return RunOutput(res, sim.trace, sim)


def _run_many(cfgs: Sequence[ScenarioConfig], registry: RuleRegistry | None, jobs: int) -> list[RunResult]:
    def one(c: ScenarioConfig) -> RunResult:
        return run_scenario(c, registry).result

    if jobs <= 1:
        return [one(c) for c in cfgs]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, cfgs))


def _check_protocols(protocols: Iterable[str]) -> list[str]:
    out = sorted(set(protocols))
    for p in out:
        if p not in PROTOCOLS:
            raise ValueError(f"unknown protocol {p!r}")
    if not out:
        raise ValueError("at least one protocol is needed")
    return out


@dataclass
class Comparison:
    results: list[RunResult]  # sorted by (protocol, seed)
    matches: dict[int, bool] | None  # seed -> digests equal; None for one protocol

    def summary(self) -> str:
        if self.matches is None:
            return f"{len(self.results)} runs"
        same = sum(self.matches.values())
        return f"{same}/{len(self.matches)} traces identical"

    def rows(self) -> list[dict]:
        from .csvout import MATCH_COLUMN, result_row

        if self.matches is None:
            return [result_row(r) for r in self.results]
        return [result_row(r, {MATCH_COLUMN: self.matches[r.seed]}) for r in self.results]


def compare_runs(
    cfg: ScenarioConfig,
    seeds: Sequence[int],
    protocols: Sequence[str] = PROTOCOLS,
    registry: RuleRegistry | None = None,
    jobs: int = 1,
) -> Comparison:
    if not seeds:
        raise ValueError("compare_runs needs at least one seed")
    protos = _check_protocols(protocols)
    seeds = sorted(set(seeds))
    cfgs = [cfg.with_overrides(protocol=p, seed=s) for p in protos for s in seeds]
    results = sorted(_run_many(cfgs, registry, jobs), key=lambda r: (r.protocol, r.seed))
    matches = None
    if len(protos) > 1:
        by_seed: dict[int, set[str]] = {}
        for r in results:
            by_seed.setdefault(r.seed, set()).add(r.trace_digest)
        matches = {s: len(d) == 1 for s, d in sorted(by_seed.items())}
    return Comparison(results, matches)


def node_range(spec: str) -> list[int]:
    """``from:to:step`` (inclusive) to a list of node counts."""
    parts = spec.split(":")
    if len(parts) not in (1, 3):
        raise ValueError(f"node range must be N or from:to:step, got {spec!r}")
    if len(parts) == 1:
        return [int(parts[0])]
    lo, hi, step = (int(p) for p in parts)
    if step <= 0 or lo > hi or lo < 1:
        raise ValueError(f"bad node range {spec!r}: need 1 <= from <= to and step > 0")
    return list(range(lo, hi + 1, step))


def sweep(
    cfg: ScenarioConfig,
    node_counts: Sequence[int],
    seeds: Sequence[int],
    protocols: Sequence[str] = PROTOCOLS,
    registry: RuleRegistry | None = None,
    jobs: int = 1,
) -> list[RunResult]:
    """One run per (protocol, node count, seed), sorted in that order."""
    protos = _check_protocols(protocols)
    cfgs = [
        replace(cfg, protocol=p, nodes=n, seed=s).validate()
        for p in protos
        for n in sorted(set(node_counts))
        for s in sorted(set(seeds))
    ]
    results = _run_many(cfgs, registry, jobs)
    return sorted(results, key=lambda r: (r.protocol, r.nodes, r.seed))
