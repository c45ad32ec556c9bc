"""Step rules and the deterministic run loop.

Rules: plain SGD, SGD with heavy-ball style momentum (m <- g + beta m),
sign descent, scaled sign descent (step (||g||_1/d) sgn g), sign descent
with momentum, and compressed SGD with error feedback (ec_sgd):

    p = gamma g + e;  D = C(p);  x <- x - D;  e <- p - D.

Scaled sign descent with error feedback is ec_sgd with the sign_scaled
compressor. Update-rule signs use sgn(0) = 0, so coordinates with exactly
zero gradient do not move; the compressor's own zero convention is part of
its spec.

run() draws oracle and compressor randomness from independent streams
spawned from one seed, so the compressor choice never perturbs the gradient
sample sequence. A scalar fast path handles low-dimensional oracles; the
generic path is numpy. Both implement identical update rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import TraceRow
from .compressors import CompressorSpec, bits_per_step, compress, rand_mask_indices
from .linalg import SpanBasis, as_vector, span_distance, span_extend
from .oracles import Oracle

RULES = ("sgd", "sgd_momentum", "sign_sgd", "sign_sgd_scaled", "signum", "ec_sgd")

_SCALAR_DIM_LIMIT = 8


class NonFiniteIterateError(RuntimeError):
    """An iterate or gradient stopped being finite; the run was aborted."""


@dataclass(frozen=True)
class OptimizerSpec:
    rule: str
    gamma: float
    beta: float = 0.0
    compressor: CompressorSpec | None = None
    projection: tuple[float, float] | None = None  # box (lo, hi), or None

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"unknown rule {self.rule!r}; expected one of {RULES}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError(f"beta must lie in [0, 1), got {self.beta}")
        if self.rule == "ec_sgd":
            if self.compressor is None:
                raise ValueError("ec_sgd requires a compressor")
        elif self.compressor is not None:
            raise ValueError(f"rule {self.rule!r} takes no compressor")
        if self.projection is not None:
            lo, hi = self.projection
            if not lo < hi:
                raise ValueError(f"projection box must have lo < hi, got {self.projection}")

    def label(self) -> str:
        if self.rule == "ec_sgd":
            return f"ec_sgd({self.compressor.label()})"
        return self.rule


@dataclass
class OptimizerState:
    x: np.ndarray
    e: np.ndarray
    m: np.ndarray
    t: int = 0


@dataclass(frozen=True)
class RecordingOptions:
    span: bool = False
    phi: bool = False
    test_loss: bool = False
    every: int = 1
    store_iterates: bool = False
    store_gradients: bool = False

    def __post_init__(self):
        if self.every < 1:
            raise ValueError("record-every must be >= 1")


@dataclass
class Trace:
    rows: list[TraceRow]
    seed: int
    final_state: OptimizerState
    empirical_delta: float | None = None
    iterates: np.ndarray | None = None  # (T+1, d) when stored
    gradients: np.ndarray | None = None  # (T, d) when stored
    bits_step: int = 0


def init_state(spec: OptimizerSpec, x0) -> OptimizerState:
    """Fresh state at x0 with zero residual error and zero momentum."""
    x = as_vector(x0)
    d = x.shape[0]
    return OptimizerState(x=x.copy(), e=np.zeros(d), m=np.zeros(d), t=0)


def step(
    spec: OptimizerSpec,
    state: OptimizerState,
    g,
    rng: np.random.Generator | None = None,
    gamma_scale: float = 1.0,
) -> OptimizerState:
    """One pure state transition under the rule; does not mutate `state`.

    `rng` feeds compressor randomness (rand_k kinds only). `gamma_scale` is
    the per-step multiplier hook for step-size schedules.
    """
    g = as_vector(g, state.x.shape[0])
    gamma = spec.gamma * gamma_scale
    x, e, m = state.x, state.e, state.m
    if spec.rule == "sgd":
        x = x - gamma * g
    elif spec.rule == "sgd_momentum":
        m = g + spec.beta * m
        x = x - gamma * m
    elif spec.rule == "sign_sgd":
        x = x - gamma * np.sign(g)
    elif spec.rule == "sign_sgd_scaled":
        x = x - (gamma * np.abs(g).sum() / g.shape[0]) * np.sign(g)
    elif spec.rule == "signum":
        m = g + spec.beta * m
        x = x - gamma * np.sign(m)
    else:  # ec_sgd
        p = gamma * g + e
        delta_vec = compress(spec.compressor, p, rng)
        x = x - delta_vec
        e = p - delta_vec
    if spec.projection is not None:
        lo, hi = spec.projection
        x = np.minimum(np.maximum(x, lo), hi)
    if not np.isfinite(x).all():
        raise NonFiniteIterateError(f"non-finite iterate after step {state.t}")
    return OptimizerState(
        x=x, e=e if e is not state.e else e.copy(), m=m if m is not state.m else m.copy(),
        t=state.t + 1,
    )


def rule_bits_per_step(spec: OptimizerSpec, d: int) -> int:
    """Communication cost of one step: the compressor's cost for ec_sgd,
    32 bits per coordinate for the dense rules, d + 32 for the sign rules
    (signs plus one scale word)."""
    if spec.rule == "ec_sgd":
        return bits_per_step(spec.compressor, d)
    if spec.rule in ("sgd", "sgd_momentum"):
        return 32 * d
    return d + 32


def make_schedule(name: str | None):
    """Per-step gamma multiplier by name: None/'constant' -> 1; 'inv_sqrt' ->
    1/sqrt(t+1); 'decimate:F1:F2[:...]' -> x0.1 at each fraction of T (bound
    later via bind_T)."""
    if name is None or name == "constant":
        return None
    if name == "inv_sqrt":
        return lambda t, T: 1.0 / math.sqrt(t + 1.0)
    if name.startswith("decimate:"):
        fracs = [float(tok) for tok in name.split(":")[1:]]
        if not fracs or not all(0.0 < f < 1.0 for f in fracs):
            raise ValueError(f"bad decimation fractions in {name!r}")
        return lambda t, T: 0.1 ** sum(t >= f * T for f in fracs)
    raise ValueError(f"unknown schedule {name!r}")


def _spawn_rngs(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    ss = np.random.SeedSequence(seed)
    oracle_ss, comp_ss = ss.spawn(2)
    return np.random.default_rng(oracle_ss), np.random.default_rng(comp_ss)


def run(
    spec: OptimizerSpec,
    oracle: Oracle,
    x0,
    T: int,
    seed: int,
    record: RecordingOptions = RecordingOptions(),
    full_batch: bool = False,
    schedule=None,
) -> Trace:
    """Drive `spec` against `oracle` for T steps; deterministic given
    (spec, oracle, x0, T, seed).

    Row t records the pre-step iterate x_t together with step-t quantities;
    the final iterate lives in Trace.final_state. `schedule` may be a name
    accepted by make_schedule or a callable (t, T) -> multiplier.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    x0 = as_vector(x0, oracle.dim)
    if isinstance(schedule, str) or schedule is None:
        schedule = make_schedule(schedule)
    if record.span:
        if T > 5000:
            raise ValueError("span recording is capped at T <= 5000")
        if float(np.linalg.norm(x0)) != 0.0:
            raise ValueError("span recording requires x0 = 0")
    use_scalar = (
        oracle.supports_scalar and oracle.dim <= _SCALAR_DIM_LIMIT and not record.span
    )
    if use_scalar:
        return _run_scalar(spec, oracle, x0, T, seed, record, full_batch, schedule)
    return _run_numpy(spec, oracle, x0, T, seed, record, full_batch, schedule)


def _run_numpy(spec, oracle, x0, T, seed, record, full_batch, schedule) -> Trace:
    oracle_rng, comp_rng = _spawn_rngs(seed)
    d = oracle.dim
    rule = spec.rule
    beta = spec.beta
    comp = spec.compressor
    x = x0.copy()
    e = np.zeros(d)
    m = np.zeros(d)
    basis = SpanBasis(d) if record.span else None
    bits_step = rule_bits_per_step(spec, d)
    rows: list[TraceRow] = []
    xs = [x.copy()] if record.store_iterates else None
    gs = [] if record.store_gradients else None
    emp_delta = None
    has_test = record.test_loss and hasattr(oracle, "test_loss")
    lo_hi = spec.projection
    for t in range(T):
        if full_batch:
            g = oracle.full_gradient(x)
        else:
            g = oracle.sample_gradient(x, oracle_rng).g
        if gs is not None:
            gs.append(np.asarray(g, dtype=np.float64).copy())
        rec = t % record.every == 0
        if rec:
            f_val = float(oracle.loss_value(x))
            fg = g if full_batch else oracle.full_gradient(x)
            grad_nsq = float(fg @ fg)
            err_nsq = float(e @ e)
            sdist = span_distance(basis, x) if basis is not None else None
            tloss = float(oracle.test_loss(x)) if has_test else None
        if basis is not None:
            span_extend(basis, g)
        gamma = spec.gamma if schedule is None else spec.gamma * schedule(t, T)
        phi_val = None
        if rule == "sgd":
            x = x - gamma * g
        elif rule == "sgd_momentum":
            m = g + beta * m
            x = x - gamma * m
        elif rule == "sign_sgd":
            x = x - gamma * np.sign(g)
        elif rule == "sign_sgd_scaled":
            x = x - (gamma * np.abs(g).sum() / d) * np.sign(g)
        elif rule == "signum":
            m = g + beta * m
            x = x - gamma * np.sign(m)
        else:  # ec_sgd
            p = gamma * g + e
            delta_vec = compress(comp, p, comp_rng)
            x = x - delta_vec
            e = p - delta_vec
            pp = float(p @ p)
            if pp > 0.0:
                diff = delta_vec - p
                dval = 1.0 - float(diff @ diff) / pp
                dval = min(1.0, max(0.0, dval))
                if emp_delta is None or dval < emp_delta:
                    emp_delta = dval
                if rec and record.phi:
                    l1 = float(np.abs(p).sum())
                    phi_val = l1 * l1 / (d * pp)
        if lo_hi is not None:
            x = np.minimum(np.maximum(x, lo_hi[0]), lo_hi[1])
        if not np.isfinite(x).all():
            raise NonFiniteIterateError(
                f"non-finite iterate at step {t} of {spec.label()} on {oracle.kind}"
            )
        if rec:
            rows.append(
                TraceRow(t, f_val, grad_nsq, err_nsq, phi_val, sdist, bits_step * (t + 1), tloss)
            )
        if xs is not None:
            xs.append(x.copy())
    final = OptimizerState(x=x, e=e, m=m, t=T)
    return Trace(
        rows=rows,
        seed=seed,
        final_state=final,
        empirical_delta=emp_delta,
        iterates=np.asarray(xs) if xs is not None else None,
        gradients=np.asarray(gs) if gs is not None else None,
        bits_step=bits_step,
    )


def _sgn_list(vals, zero_value):
    return [1.0 if v > 0 else (-1.0 if v < 0 else zero_value) for v in vals]


def _run_scalar(spec, oracle, x0, T, seed, record, full_batch, schedule) -> Trace:
    """Python-float twin of _run_numpy for low-dimensional oracles."""
    oracle_rng, comp_rng = _spawn_rngs(seed)
    d = oracle.dim
    rule = spec.rule
    beta = spec.beta
    comp = spec.compressor
    czero = 0.0
    if comp is not None:
        czero = 1.0 if comp.sign_zero == "plus_one" else 0.0
    x = [float(v) for v in x0]
    e = [0.0] * d
    m = [0.0] * d
    bits_step = rule_bits_per_step(spec, d)
    rows: list[TraceRow] = []
    xs = list(x) if record.store_iterates else None  # flat, reshaped at the end
    gs = [] if record.store_gradients else None
    emp_delta = None
    has_test = record.test_loss and hasattr(oracle, "test_loss")
    lo_hi = spec.projection
    rng_int = oracle_rng  # local alias
    for t in range(T):
        if full_batch:
            g = oracle.full_gradient_scalar(x)
        else:
            g, _ = oracle.sample_scalar(x, rng_int)
        if gs is not None:
            gs.extend(g)
        rec = t % record.every == 0
        if rec:
            f_val = oracle.loss_scalar(x)
            fg = g if full_batch else oracle.full_gradient_scalar(x)
            grad_nsq = 0.0
            for v in fg:
                grad_nsq += v * v
            err_nsq = 0.0
            for v in e:
                err_nsq += v * v
            tloss = float(oracle.test_loss(np.asarray(x))) if has_test else None
        gamma = spec.gamma if schedule is None else spec.gamma * schedule(t, T)
        phi_val = None
        if rule == "sgd":
            x = [xv - gamma * gv for xv, gv in zip(x, g)]
        elif rule == "sgd_momentum":
            m = [gv + beta * mv for gv, mv in zip(g, m)]
            x = [xv - gamma * mv for xv, mv in zip(x, m)]
        elif rule == "sign_sgd":
            x = [xv - gamma * ((gv > 0) - (gv < 0)) for xv, gv in zip(x, g)]
        elif rule == "sign_sgd_scaled":
            scale = gamma * sum(abs(v) for v in g) / d
            x = [xv - scale * ((gv > 0) - (gv < 0)) for xv, gv in zip(x, g)]
        elif rule == "signum":
            m = [gv + beta * mv for gv, mv in zip(g, m)]
            x = [xv - gamma * ((mv > 0) - (mv < 0)) for xv, mv in zip(x, m)]
        else:  # ec_sgd
            p = [gamma * gv + ev for gv, ev in zip(g, e)]
            delta_vec = _compress_scalar(comp, p, d, czero, comp_rng)
            x = [xv - dv for xv, dv in zip(x, delta_vec)]
            e = [pv - dv for pv, dv in zip(p, delta_vec)]
            pp = 0.0
            for v in p:
                pp += v * v
            if pp > 0.0:
                dd = 0.0
                for j in range(d):
                    r = delta_vec[j] - p[j]
                    dd += r * r
                dval = min(1.0, max(0.0, 1.0 - dd / pp))
                if emp_delta is None or dval < emp_delta:
                    emp_delta = dval
                if rec and record.phi:
                    l1 = sum(abs(v) for v in p)
                    phi_val = l1 * l1 / (d * pp)
        if lo_hi is not None:
            lo, hi = lo_hi
            x = [lo if v < lo else (hi if v > hi else v) for v in x]
        for v in x:
            if not math.isfinite(v):
                raise NonFiniteIterateError(
                    f"non-finite iterate at step {t} of {spec.label()} on {oracle.kind}"
                )
        if rec:
            rows.append(
                TraceRow(t, f_val, grad_nsq, err_nsq, phi_val, None, bits_step * (t + 1), tloss)
            )
        if xs is not None:
            xs.extend(x)
    final = OptimizerState(x=np.asarray(x), e=np.asarray(e), m=np.asarray(m), t=T)
    return Trace(
        rows=rows,
        seed=seed,
        final_state=final,
        empirical_delta=emp_delta,
        iterates=np.asarray(xs).reshape(T + 1, d) if xs is not None else None,
        gradients=np.asarray(gs).reshape(T, d) if gs is not None else None,
        bits_step=bits_step,
    )


def _compress_scalar(comp, p, d, czero, rng):
    """Scalar-path twin of compressors.compress for a python list p."""
    if comp.kind in ("top_k", "rand_k_unbiased", "rand_k_feedback") and comp.k > d:
        raise ValueError(f"k={comp.k} out of range for dimension {d}")
    if not any(v != 0.0 for v in p):
        return [0.0] * d
    kind = comp.kind
    if kind == "identity":
        return list(p)
    if kind == "sign_scaled":
        scale = sum(abs(v) for v in p) / d
        return [scale * s for s in _sgn_list(p, czero)]
    if kind == "sign_raw":
        return _sgn_list(p, czero)
    if kind == "top_k":
        order = sorted(range(d), key=lambda j: (-abs(p[j]), j))
        out = [0.0] * d
        for j in order[: comp.k]:
            out[j] = p[j]
        return out
    # rand_k kinds share the mask helper with the numpy path
    idx = rand_mask_indices(d, comp.k, rng)
    out = [0.0] * d
    if kind == "rand_k_unbiased":
        scale = d / comp.k
        for j in idx:
            out[j] = scale * p[j]
    else:
        for j in idx:
            out[j] = p[j]
    return out
