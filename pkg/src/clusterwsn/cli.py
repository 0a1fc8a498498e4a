"""Command line front end: ``run``, ``sweep`` and ``figures``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from . import harness
from .engine import ConfigError, RunConfig, run
from .topology import TopologyError

OUT_ENV = "CLUSTERWSN_OUT"

log = logging.getLogger("clusterwsn")


def _default_out(cli_value: str | None, cfg_value: str | None = None) -> Path:
    return Path(cli_value or cfg_value or os.environ.get(OUT_ENV) or "results")


def _load(path: str) -> harness.SweepConfig:
    return harness.parse_config(Path(path).read_text())


def cmd_run(args) -> int:
    sc = _load(args.config)
    if sc.axes:
        raise harness.SweepConfigError(f"run takes a single configuration; found axes {list(sc.axes)}")
    seed = args.seed if args.seed is not None else sc.seeds[0]
    cfg = RunConfig(**sc.base, seed=seed)

    def trace(report):
        print(json.dumps(report.to_record()), flush=True)

    res = run(cfg, trace=trace if args.trace else None)
    summary = {
        "config": harness.config_echo(cfg),
        "seed": seed,
        "lifetime_rounds": res.lifetime_rounds,
        "first_dead_node": res.first_dead_node,
        "truncated": res.truncated,
        "total_energy": res.total_energy,
        **dataclasses.asdict(res.counters),
    }
    print(json.dumps(summary, indent=None if args.trace else 2))
    return 0


def _write_outputs(rows, out: Path) -> None:
    harness.write_csv(rows, out / "results.csv")
    harness.write_csv(harness.summarize(rows), out / "summary.csv", harness.SUMMARY_FIELDS)


def cmd_sweep(args) -> int:
    sc = _load(args.config)
    seeds = list(range(args.seeds)) if args.seeds is not None else sc.seeds
    if not seeds:
        raise harness.SweepConfigError("at least one seed is required")
    configs = harness.expand_sweep(sc)
    if not configs:
        raise harness.SweepConfigError("every combination in the sweep is infeasible")
    out = _default_out(args.out, sc.out_dir)
    rows = harness.execute(configs, seeds, args.jobs)
    _write_outputs(rows, out)
    for family, axis in harness.FAMILY_AXES.items():
        if axis in sc.axes:
            try:
                harness.write_figure_tables(rows, family, out)
            except harness.FigureError as exc:
                log.info("no %s tables: %s", family, exc)
    log.info("%d configs x %d seeds -> %s", len(configs), len(seeds), out)
    return 0


def cmd_figures(args) -> int:
    out = _default_out(args.out)
    all_rows = []
    for family, sc in harness.figure_sweeps():
        seeds = list(range(args.seeds)) if args.seeds is not None else sc.seeds
        rows = harness.execute(harness.expand_sweep(sc), seeds, args.jobs)
        harness.write_figure_tables(rows, family, out)
        all_rows.extend(rows)
        log.info("%s %s/%s done", family, sc.base["sink_placement"].name, sc.base["sizing"].name)
    _write_outputs(all_rows, out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clusterwsn", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one configuration")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--trace", action="store_true", help="print one JSON record per round")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a parameter grid over seeds")
    s.add_argument("--config", required=True)
    s.add_argument("--seeds", type=int, help="use seeds 0..N-1 instead of the config's")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./results)")
    s.set_defaults(func=cmd_sweep)

    f = sub.add_parser("figures", help="run the canonical sweeps behind every figure table")
    f.add_argument("--seeds", type=int, help=f"seed count (default {harness.CANONICAL_SEEDS})")
    f.add_argument("--jobs", type=int, default=1)
    f.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./results)")
    f.set_defaults(func=cmd_figures)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (harness.SweepConfigError, ConfigError, TopologyError, OSError) as exc:
        print(f"clusterwsn: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
