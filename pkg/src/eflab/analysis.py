"""Per-iteration trace records, worst-case bound evaluators for
error-feedback compressed SGD, gradient-span distance series, and run
summaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .linalg import SpanBasis, as_vector, span_distance, span_extend


class TraceRow(NamedTuple):
    """Metrics for iteration t: the pre-step iterate x_t plus step-t
    quantities. phi_p, span_dist and test_loss are None when not recorded;
    bits_cum counts bits transmitted through the end of step t."""

    t: int
    f_val: float
    grad_norm_sq: float
    err_norm_sq: float
    phi_p: float | None
    span_dist: float | None
    bits_cum: int
    test_loss: float | None


@dataclass(frozen=True)
class RunSummary:
    seed: int
    min_grad_norm_sq: float
    avg_iterate_loss: float | None
    final_err_norm_sq: float
    empirical_delta: float | None


def _check_delta(delta: float):
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")


def error_norm_bound(gamma: float, sigma_sq: float, delta: float) -> float:
    """Worst-case bound 4 (1-delta) gamma^2 sigma^2 / delta^2 on the expected
    squared residual-error norm of an error-feedback run whose compressor is
    delta-contractive and whose gradients satisfy E||g||^2 <= sigma^2."""
    _check_delta(delta)
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if sigma_sq < 0:
        raise ValueError("sigma_sq must be >= 0")
    return 4.0 * (1.0 - delta) * gamma * gamma * sigma_sq / (delta * delta)


def smooth_min_grad_bound(
    f0: float, L: float, sigma_sq: float, delta: float, gamma: float, T: int
) -> float:
    """Bound on min_t E||grad f(x_t)||^2 over T+1 iterations of compressed
    SGD with error feedback on an L-smooth objective:

        2 f0 / (gamma (T+1)) + gamma L sigma^2 / 2
                             + 4 gamma^2 L^2 sigma^2 (1-delta) / delta^2.
    """
    _check_delta(delta)
    if f0 < 0:
        raise ValueError("f0 must be >= 0")
    if gamma <= 0 or L < 0 or sigma_sq < 0 or T < 0:
        raise ValueError("parameters out of range")
    return (
        2.0 * f0 / (gamma * (T + 1))
        + gamma * L * sigma_sq / 2.0
        + 4.0 * gamma * gamma * L * L * sigma_sq * (1.0 - delta) / (delta * delta)
    )


def sgd_min_grad_bound(f0: float, L: float, sigma_sq: float, T: int) -> float:
    """Plain-SGD comparator at step size 1/sqrt(T+1):
    (2 f0 + L sigma^2) / (2 sqrt(T+1)). Compression-free."""
    if f0 < 0 or L < 0 or sigma_sq < 0 or T < 0:
        raise ValueError("parameters out of range")
    return (2.0 * f0 + L * sigma_sq) / (2.0 * math.sqrt(T + 1))


def convex_avg_loss_bound(
    dist0_sq: float, gamma: float, T: int, sigma_sq: float, delta: float
) -> float:
    """Bound on E f(x_bar) - f* for the averaged iterate of compressed SGD
    with error feedback on a convex (possibly non-smooth) objective:

        ||x0 - x*||^2 / (2 gamma (T+1))
            + gamma sigma^2 (1/2 + 2 sqrt(1-delta) / delta).
    """
    _check_delta(delta)
    if dist0_sq < 0 or gamma <= 0 or sigma_sq < 0 or T < 0:
        raise ValueError("parameters out of range")
    return dist0_sq / (2.0 * gamma * (T + 1)) + gamma * sigma_sq * (
        0.5 + 2.0 * math.sqrt(1.0 - delta) / delta
    )


def span_distance_series(gradients, iterates, rank_tolerance: float = 1e-10) -> list[float]:
    """Distance of each iterate to the span of all earlier gradients.

    Takes gradients g_0..g_{T-1} and iterates x_0..x_T with x_0 = 0; element
    t is || x_t - P_t x_t || where P_t projects onto span{g_0, .., g_{t-1}}
    (the zero subspace at t = 0). Built incrementally.
    """
    iterates = [as_vector(x) for x in iterates]
    gradients = [as_vector(g) for g in gradients]
    if len(iterates) != len(gradients) + 1:
        raise ValueError(
            f"need one more iterate than gradients, got {len(iterates)} and {len(gradients)}"
        )
    dim = iterates[0].shape[0]
    if float(np.linalg.norm(iterates[0])) != 0.0:
        raise ValueError("the series is defined for runs started at x0 = 0")
    basis = SpanBasis(dim, rank_tolerance=rank_tolerance)
    out = []
    for t, x in enumerate(iterates):
        out.append(span_distance(basis, x))
        if t < len(gradients):
            span_extend(basis, gradients[t])
    return out


def summarize(trace, oracle=None) -> RunSummary:
    """Collapse a Trace into end-of-run aggregates.

    avg_iterate_loss is f evaluated at the mean of the stored iterates
    (requires store_iterates recording and an oracle to evaluate); None
    otherwise. empirical_delta is the running minimum of the per-step
    measured contraction on p_t, tracked during the run for error-feedback
    rules.
    """
    if not trace.rows:
        raise ValueError("empty trace")
    min_grad = min(row.grad_norm_sq for row in trace.rows)
    avg_loss = None
    if oracle is not None and trace.iterates is not None:
        x_bar = trace.iterates.mean(axis=0)
        avg_loss = float(oracle.loss_value(x_bar))
    e = trace.final_state.e
    return RunSummary(
        seed=trace.seed,
        min_grad_norm_sq=min_grad,
        avg_iterate_loss=avg_loss,
        final_err_norm_sq=float(e @ e),
        empirical_delta=trace.empirical_delta,
    )
