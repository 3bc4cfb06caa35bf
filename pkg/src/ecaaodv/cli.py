"""Command-line front end.

    ecaaodv run     --scenario S [--protocol P] [--rules R] [--out CSV] [--trace FILE]
    ecaaodv sweep   --nodes FROM:TO:STEP [--seeds N] [--protocol both] --out CSV
    ecaaodv compare [--seeds N] [--protocol both] --rules R --out CSV
    ecaaodv museum  --rules R [--stream FILE] [--floor FILE] --out LOG

``--rules default`` picks the rule file shipped with the package.  Exit
status: 0 ok, 2 usage, 3 parse/validation, 4 I/O.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from .aodv.eca_adapter import AODV_HOST
from .eca import EcaError, RuleRegistry
from .harness.csvout import COLUMNS, MATCH_COLUMN, write_csv
from .harness.museum import (
    MUSEUM_HOST,
    default_floor,
    default_stream,
    load_floor,
    museum_demo,
    parse_stream,
)
from .harness.rulefile import RuleHost, parse_rules
from .harness.runner import compare_runs, node_range, run_scenario, sweep
from .harness.scenario import ScenarioConfig, ScenarioError, apply_setting, parse_scenario
from .resources import read_data

EXIT_USAGE, EXIT_PARSE, EXIT_IO = 2, 3, 4


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ecaaodv", description="AODV / ECA-AODV MANET simulator")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp: argparse.ArgumentParser, protocol_default: str | None) -> None:
        sp.add_argument("--scenario", help="scenario file (default: built-in defaults)")
        sp.add_argument("--rules", help="rule file, or 'default' for the shipped one")
        sp.add_argument("--out", required=True, help="CSV output path")
        sp.add_argument("--seed", type=int, help="seed (base seed for --seeds)")
        sp.add_argument("--protocol", choices=("aodv", "eca-aodv", "both"), default=protocol_default)
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a scenario key")
        sp.add_argument("--jobs", type=int, default=1, help="worker threads")

    run = sub.add_parser("run", help="run one scenario")
    common(run, None)
    run.add_argument("--nodes", type=int, help="node count override")
    run.add_argument("--trace", help="trace output path (default: <out>.trace)")

    sw = sub.add_parser("sweep", help="sweep node counts")
    common(sw, "both")
    sw.add_argument("--nodes", required=True, help="FROM:TO:STEP")
    sw.add_argument("--seeds", type=int, default=1, help="seeds per point")

    cmp_ = sub.add_parser("compare", help="baseline vs ECA runs over several seeds")
    common(cmp_, "both")
    cmp_.add_argument("--nodes", type=int, help="node count override")
    cmp_.add_argument("--seeds", type=int, default=20, help="number of seeds")

    mu = sub.add_parser("museum", help="run the museum rule demo")
    mu.add_argument("--rules", help="museum rule file, or 'default'")
    mu.add_argument("--stream", help="context stream file (default: shipped stream)")
    mu.add_argument("--floor", help="floor graph file (default: shipped floor)")
    mu.add_argument("--out", required=True, help="decision log path")
    return p


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_rules(path: str | None, host: RuleHost, shipped: str) -> RuleRegistry:
    if path is None:
        raise UsageError("--rules is required here")
    text = read_data(shipped) if path == "default" else _read(path)
    return parse_rules(text, host)


def _config(args: argparse.Namespace) -> ScenarioConfig:
    cfg = parse_scenario(_read(args.scenario)) if args.scenario else ScenarioConfig()
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        cfg = apply_setting(cfg, key.strip(), value.strip())
    if args.seed is not None:
        cfg = cfg.with_overrides(seed=args.seed)
    if getattr(args, "nodes", None) is not None and args.verb != "sweep":
        cfg = cfg.with_overrides(nodes=args.nodes)
    return cfg


def _protocols(args: argparse.Namespace, cfg: ScenarioConfig) -> list[str]:
    chosen = args.protocol or cfg.protocol
    return ["aodv", "eca-aodv"] if chosen == "both" else [chosen]


def _registry_for(args: argparse.Namespace, protocols: Sequence[str]) -> RuleRegistry | None:
    if "eca-aodv" in protocols:
        if args.rules is None:
            raise UsageError("--rules is required when eca-aodv is selected")
        return _load_rules(args.rules, AODV_HOST, "default_aodv.rules")
    return None


def _seeds(args: argparse.Namespace, cfg: ScenarioConfig) -> list[int]:
    if args.seeds < 1:
        raise UsageError("--seeds must be at least 1")
    base = cfg.seed
    return list(range(base, base + args.seeds))


def execute(argv: Sequence[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _dispatch(args)
    except UsageError as exc:
        print(f"ecaaodv: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ScenarioError, EcaError, ValueError) as exc:
        print(f"ecaaodv: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"ecaaodv: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def _dispatch(args: argparse.Namespace) -> int:
    if args.verb == "museum":
        registry = _load_rules(args.rules, MUSEUM_HOST, "museum.rules")
        stream = parse_stream(_read(args.stream)) if args.stream else default_stream()
        floor = load_floor(_read(args.floor)) if args.floor else default_floor()
        log = museum_demo(stream, registry, floor)
        Path(args.out).write_text("".join(e.line() + "\n" for e in log), encoding="utf-8")
        print(f"{len(log)} decisions over {len(stream)} context changes")
        return 0

    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    cfg = _config(args)
    protocols = _protocols(args, cfg)

    if args.verb == "run":
        if len(protocols) != 1:
            raise UsageError("run takes a single protocol")
        cfg = cfg.with_overrides(protocol=protocols[0])
        out = run_scenario(cfg, _registry_for(args, protocols))
        trace_path = args.trace or str(Path(args.out).with_suffix(".trace"))
        out.trace.write(trace_path)
        write_csv([out.result], args.out)
        r = out.result
        print(f"{r.run_id}: pdr={r.pdr:.4f} ctrl_bytes={r.ctrl_bytes} eca_events={r.eca_events}")
        return 0

    registry = _registry_for(args, protocols)
    if args.verb == "sweep":
        try:
            counts = node_range(args.nodes)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        rows = sweep(cfg, counts, _seeds(args, cfg), protocols, registry, args.jobs)
        write_csv(rows, args.out)
        print(f"{len(rows)} runs written to {args.out}")
        return 0

    if args.verb == "compare":
        cmp = compare_runs(cfg, _seeds(args, cfg), protocols, registry, args.jobs)
        columns = COLUMNS + (MATCH_COLUMN,) if cmp.matches is not None else COLUMNS
        write_csv(cmp.rows(), args.out, columns)
        print(cmp.summary())
        return 0

    raise UsageError(f"unknown verb {args.verb}")  # pragma: no cover


def main() -> None:
    sys.exit(execute())


if __name__ == "__main__":
    main()
