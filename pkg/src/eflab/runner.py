"""Config-driven experiment execution: one run per seed, trace CSV per seed,
one summary CSV, and a meta.txt capturing the exact configuration.

Seeds run concurrently up to a jobs limit; every run owns its random
streams and its output file, so results are byte-identical regardless of
scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from . import __version__
from .analysis import RunSummary, summarize
from .config import ExperimentConfig
from .optimizers import Trace, run
from .traceio import write_summary_csv, write_trace_csv


def trace_path(output_dir: str, seed: int) -> str:
    return os.path.join(output_dir, f"trace_seed{seed}.csv")


def summary_path(output_dir: str) -> str:
    return os.path.join(output_dir, "summary.csv")


def config_text(cfg: ExperimentConfig) -> str:
    """Deterministic textual echo of a config (written to meta.txt)."""
    opt = cfg.optimizer
    lines = [
        f"oracle.kind = {cfg.oracle_kind}",
        f"oracle.seed = {cfg.oracle_seed}",
    ]
    for key in sorted(cfg.oracle_params):
        val = cfg.oracle_params[key]
        if hasattr(val, "shape"):
            val = f"<array {getattr(val, 'shape')}>"
        lines.append(f"oracle.{key} = {val}")
    lines += [
        f"optimizer.rule = {opt.rule}",
        f"optimizer.gamma = {opt.gamma!r}",
        f"optimizer.beta = {opt.beta!r}",
    ]
    if opt.compressor is not None:
        lines.append(f"optimizer.compressor = {opt.compressor.label()}")
    if opt.projection is not None:
        lines.append(f"optimizer.projection = box:{opt.projection[0]!r}:{opt.projection[1]!r}")
    x0 = cfg.x0 if isinstance(cfg.x0, str) else ",".join(repr(v) for v in cfg.x0)
    lines += [
        f"run.T = {cfg.T}",
        f"run.seeds = {','.join(str(s) for s in cfg.seeds)}",
        f"run.x0 = {x0}",
        f"run.full_batch = {str(cfg.full_batch).lower()}",
        f"run.schedule = {cfg.schedule or 'constant'}",
        f"run.output_dir = {cfg.output_dir}",
        f"record.span = {str(cfg.record.span).lower()}",
        f"record.phi = {str(cfg.record.phi).lower()}",
        f"record.test_loss = {str(cfg.record.test_loss).lower()}",
        f"record.every = {cfg.record.every}",
        f"record.store_iterates = {str(cfg.record.store_iterates).lower()}",
    ]
    return "\n".join(lines) + "\n"


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, write: bool = True) -> dict[int, Trace]:
    """Execute the configured runs; returns seed -> Trace.

    With write=True, emits trace_seed{S}.csv per seed, summary.csv, and
    meta.txt under cfg.output_dir.
    """
    oracle = cfg.build_oracle()
    x0 = cfg.resolve_x0(oracle.dim)

    def one(seed: int) -> tuple[int, Trace]:
        trace = run(
            cfg.optimizer,
            oracle,
            x0,
            cfg.T,
            seed,
            record=cfg.record,
            full_batch=cfg.full_batch,
            schedule=cfg.schedule,
        )
        if write:
            write_trace_csv(trace_path(cfg.output_dir, seed), trace.rows)
        return seed, trace

    if write:
        os.makedirs(cfg.output_dir, exist_ok=True)
    if jobs > 1 and len(cfg.seeds) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = dict(pool.map(one, cfg.seeds))
    else:
        results = dict(one(s) for s in cfg.seeds)

    if write:
        summaries: list[RunSummary] = [
            summarize(results[seed], oracle) for seed in cfg.seeds
        ]
        write_summary_csv(summary_path(cfg.output_dir), summaries)
        meta = (
            f"eflab {__version__}\n"
            + config_text(cfg)
            + f"seeds = {','.join(str(s) for s in cfg.seeds)}\n"
        )
        with open(os.path.join(cfg.output_dir, "meta.txt"), "w", encoding="utf-8") as fh:
            fh.write(meta)
    return results
