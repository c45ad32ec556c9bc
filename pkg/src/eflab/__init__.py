"""Error-feedback compressed gradient methods, analytic benchmark oracles,
convergence-bound checkers, and a deterministic experiment runner."""

__version__ = "0.1.0"

from .analysis import (
    RunSummary,
    TraceRow,
    convex_avg_loss_bound,
    error_norm_bound,
    sgd_min_grad_bound,
    smooth_min_grad_bound,
    span_distance_series,
    summarize,
)
from .compressors import (
    CompressorSpec,
    bits_per_step,
    compress,
    contraction_delta,
    density_phi,
    parse_compressor,
)
from .config import ExperimentConfig, lr_grid, load_config, parse_config
from .linalg import SpanBasis, min_norm_solution, project, span_distance, span_extend
from .optimizers import (
    OptimizerSpec,
    OptimizerState,
    RecordingOptions,
    Trace,
    init_state,
    run,
    step,
)
from .oracles import GradientSample, Oracle, OracleMeta, build_oracle

__all__ = [
    "CompressorSpec",
    "ExperimentConfig",
    "GradientSample",
    "OptimizerSpec",
    "OptimizerState",
    "Oracle",
    "OracleMeta",
    "RecordingOptions",
    "RunSummary",
    "SpanBasis",
    "Trace",
    "TraceRow",
    "bits_per_step",
    "compress",
    "contraction_delta",
    "convex_avg_loss_bound",
    "density_phi",
    "error_norm_bound",
    "init_state",
    "load_config",
    "lr_grid",
    "min_norm_solution",
    "parse_compressor",
    "parse_config",
    "project",
    "run",
    "sgd_min_grad_bound",
    "smooth_min_grad_bound",
    "span_distance",
    "span_distance_series",
    "span_extend",
    "step",
    "summarize",
]
