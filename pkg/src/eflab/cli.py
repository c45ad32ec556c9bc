"""Command-line entry point.

  ef-lab run <cfg>                     execute a config, emit CSVs
  ef-lab sweep <cfg>                   9-point log step-size grid, report best
  ef-lab reproduce <name> [--out DIR] [--jobs N] [--svg]
  ef-lab selftest                      run the built-in invariant suite

Exit codes: 0 success/verdict pass, 1 verdict fail, 2 usage or config error.
The environment variable EF_LAB_SEED (comma-separated integers) overrides
config seeds.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .config import ConfigError, load_config, lr_grid
from .reproduce import REPRODUCTIONS, reproduce
from .runner import run_experiment
from .selftest import run_selftest
from .traceio import read_trace_csv

USAGE_ERROR = 2
VERDICT_FAIL = 1


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    run_experiment(cfg, jobs=args.jobs)
    n = len(cfg.seeds)
    print(f"wrote {n} trace file{'s' if n != 1 else ''} + summary.csv + meta.txt "
          f"under {cfg.output_dir}")
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    oracle = cfg.build_oracle()
    use_test = hasattr(oracle, "test_loss")
    metric_name = "test loss" if use_test else "final train loss"
    results = []
    for gi, gamma in enumerate(lr_grid()):
        sub = replace(cfg)
        sub.optimizer = replace(cfg.optimizer, gamma=gamma)
        sub.output_dir = os.path.join(cfg.output_dir, f"gamma{gi}")
        if use_test and not sub.record.test_loss:
            sub.record = replace(sub.record, test_loss=True)
        run_experiment(sub, jobs=args.jobs)
        finals = []
        for seed in sub.seeds:
            rows = read_trace_csv(os.path.join(sub.output_dir, f"trace_seed{seed}.csv"))
            finals.append(rows[-1].test_loss if use_test else rows[-1].f_val)
        results.append((gamma, float(np.mean(finals))))
    print(f"gamma sweep ({metric_name}, mean over {len(cfg.seeds)} seed(s)):")
    for gamma, val in results:
        print(f"  gamma = {gamma:<12.6g} {metric_name} = {val:.6g}")
    best_gamma, best_val = min(results, key=lambda gv: gv[1])
    print(f"best gamma = {best_gamma:.6g} ({metric_name} = {best_val:.6g})")
    sweep_csv = os.path.join(cfg.output_dir, "sweep.csv")
    with open(sweep_csv, "w", encoding="utf-8") as fh:
        fh.write("gamma,final_metric\n")
        for gamma, val in results:
            fh.write(f"{gamma!r},{val!r}\n")
    return 0


def cmd_reproduce(args) -> int:
    report = reproduce(args.name, args.out, svg=args.svg, jobs=args.jobs)
    print(f"reproduce {args.name}:")
    for line in report.lines:
        print(line)
    print(f"verdict: {'PASS' if report.passed else 'FAIL'}")
    return 0 if report.passed else VERDICT_FAIL


def cmd_selftest(args) -> int:
    return 0 if run_selftest() else VERDICT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ef-lab",
        description="error-feedback compressed gradient experiments",
    )
    parser.add_argument("--version", action="version", version=f"ef-lab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a config file")
    p_run.add_argument("config")
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="step-size grid sweep over a config")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.set_defaults(fn=cmd_sweep)

    p_rep = sub.add_parser("reproduce", help="run a named desk-scale reproduction")
    p_rep.add_argument("name", choices=REPRODUCTIONS)
    p_rep.add_argument("--out", default="out")
    p_rep.add_argument("--jobs", type=int, default=1)
    p_rep.add_argument("--svg", action="store_true", help="also emit SVG line plots")
    p_rep.set_defaults(fn=cmd_reproduce)

    p_self = sub.add_parser("selftest", help="run the built-in invariant suite")
    p_self.set_defaults(fn=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return USAGE_ERROR if err.code not in (0, None) else 0
    try:
        return args.fn(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return USAGE_ERROR
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE_ERROR
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE_ERROR


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
