"""Command line entry points: run, compare, sweep.

Exit codes: 0 on success, 2 on configuration errors.  Set SPECONSIM_LOG to
debug/info/warning to control verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import ConfigError, load_config
from .harness import (
    compare_scenarios,
    load_grid,
    run_scenario,
    sweep,
    write_compare,
    write_report,
    write_sweep,
)

log = logging.getLogger("speconsim")


def _setup_logging() -> None:
    level = os.environ.get("SPECONSIM_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="speconsim",
                                     description="Container-cluster training scheduler simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="scenario YAML file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")

    p_run = sub.add_parser("run", help="execute one scenario")
    common(p_run)
    p_cmp = sub.add_parser("compare", help="run specon and ds on the same schedule")
    common(p_cmp)
    p_sweep = sub.add_parser("sweep", help="paired comparison per grid point")
    common(p_sweep)
    p_sweep.add_argument("--grid", required=True, help="grid YAML file with alpha/interval points")
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be a non-negative integer")
            cfg = cfg.replace(seed=args.seed)
        if args.command == "run":
            report = run_scenario(cfg)
            write_report(report, args.out, cfg)
            print(f"{cfg.label}: policy={cfg.policy} "
                  f"average_completion={report.average_completion:.1f}s "
                  f"makespan={report.makespan:.1f}s -> {args.out}")
        elif args.command == "compare":
            cmp = compare_scenarios(cfg)
            write_compare(cmp, args.out, cfg)
            print(f"{cfg.label}: reduced={cmp.reduced_pct:.1f}% "
                  f"overall={cmp.overall_pct:.1f}% best={cmp.best_pct:.1f}% "
                  f"makespan={cmp.makespan_pct:.1f}% -> {args.out}")
        elif args.command == "sweep":
            rows = sweep(cfg, load_grid(args.grid))
            write_sweep(rows, args.out)
            for r in rows:
                print(f"alpha={r.alpha} interval={r.interval}: "
                      f"reduced={r.reduced_pct:.1f}% overall={r.overall_pct:.1f}% "
                      f"best={r.best_pct:.1f}% makespan={r.makespan_pct:.1f}%")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
