"""Built-in invariant suite behind `ef-lab selftest`.

Each check returns (ok, detail); the pytest suite reuses these functions, so
the shipped binary can re-verify the same contracts without a test install.
"""

from __future__ import annotations

import math

import numpy as np

from .analysis import convex_avg_loss_bound, error_norm_bound, smooth_min_grad_bound
from .compressors import (
    CompressorSpec,
    compress,
    contraction_delta,
    density_phi,
    guaranteed_delta,
)
from .linalg import SpanBasis, project, span_extend
from .optimizers import OptimizerSpec
from .oracles import build_oracle


def check_deterministic_contraction(n_vectors: int = 10_000) -> tuple[bool, str]:
    """identity / sign_scaled / top_k / sign_raw contract on every vector:
    measured contraction >= a-priori guarantee - 1e-12."""
    rng = np.random.default_rng(7)
    worst = math.inf
    for d in (2, 10, 100):
        specs = [
            CompressorSpec("identity"),
            CompressorSpec("sign_scaled"),
            CompressorSpec("sign_raw"),
            CompressorSpec("top_k", k=max(1, d // 4)),
            CompressorSpec("top_k", k=d),
        ]
        vs = rng.standard_normal((n_vectors // 10 if d == 100 else n_vectors, d))
        for spec in specs:
            for v in vs:
                c = compress(spec, v)
                delta = contraction_delta(v, c)
                floor = guaranteed_delta(spec, d, v)
                if floor is None:
                    floor = 0.0
                margin = delta - (floor - 1e-12)
                worst = min(worst, margin)
                if margin < 0:
                    return False, f"{spec.label()} d={d}: delta {delta} below floor {floor}"
    return True, f"worst margin over guarantees: {worst:.3e}"


def check_expected_contraction(n_samples: int = 10_000) -> tuple[bool, str]:
    """rand_k_feedback contracts in expectation: mean ||c - v||^2 <=
    (1 - k/d) ||v||^2 (1 + 3 SE)."""
    rng = np.random.default_rng(11)
    details = []
    for d, k in ((10, 3), (100, 25)):
        v = rng.standard_normal(d)
        spec = CompressorSpec("rand_k_feedback", k=k)
        errs = np.empty(n_samples)
        for i in range(n_samples):
            c = compress(spec, v, rng)
            errs[i] = float(((c - v) ** 2).sum())
        bound = (1.0 - k / d) * float(v @ v)
        se = errs.std(ddof=1) / math.sqrt(n_samples)
        ok = errs.mean() <= bound * (1.0 + 3.0 * se / max(bound, 1e-300))
        details.append(f"d={d},k={k}: mean {errs.mean():.4f} vs bound {bound:.4f}")
        if not ok:
            return False, details[-1]
    return True, "; ".join(details)


def check_unbiased_compressor(n_samples: int = 100_000) -> tuple[bool, str]:
    """rand_k_unbiased: per-coordinate mean within 4 SE of v, and mean
    squared norm <= (d/k) ||v||^2 (1 + 3 SE)."""
    rng = np.random.default_rng(13)
    d, k = 10, 3
    v = rng.standard_normal(d)
    spec = CompressorSpec("rand_k_unbiased", k=k)
    acc = np.zeros(d)
    acc_sq = np.zeros(d)
    norms = np.empty(n_samples)
    for i in range(n_samples):
        c = compress(spec, v, rng)
        acc += c
        acc_sq += c * c
        norms[i] = float(c @ c)
    mean = acc / n_samples
    var = acc_sq / n_samples - mean**2
    se = np.sqrt(np.maximum(var, 0.0) / n_samples)
    dev = np.abs(mean - v)
    if not np.all(dev <= 4.0 * se + 1e-12):
        worst = int(np.argmax(dev - 4.0 * se))
        return False, f"coordinate {worst}: |mean - v| = {dev[worst]:.3e} > 4 SE = {4*se[worst]:.3e}"
    bound = (d / k) * float(v @ v)
    n_se = norms.std(ddof=1) / math.sqrt(n_samples)
    if norms.mean() > bound * (1.0 + 3.0 * n_se / bound):
        return False, f"E||U(v)||^2 = {norms.mean():.4f} exceeds (d/k)||v||^2 = {bound:.4f}"
    return True, f"max coordinate deviation {np.max(dev / np.maximum(se, 1e-300)):.2f} SE"


def check_mask_coupling() -> tuple[bool, str]:
    """With identical masks, rand_k_unbiased output equals (d/k) x the
    rand_k_feedback output, bit for bit."""
    rng = np.random.default_rng(17)
    for d, k in ((10, 3), (100, 25), (7, 7)):
        v = rng.standard_normal(d)
        seed = int(rng.integers(2**31))
        fb = compress(CompressorSpec("rand_k_feedback", k=k), v, np.random.default_rng(seed))
        un = compress(CompressorSpec("rand_k_unbiased", k=k), v, np.random.default_rng(seed))
        if not np.array_equal(un, (d / k) * fb):
            return False, f"mask coupling broken for d={d}, k={k}"
    return True, "U(v) == (d/k) C_fb(v) exactly under shared masks"


def check_density_range(n_vectors: int = 2000) -> tuple[bool, str]:
    """density in [1/d, 1]; 1/d at one-hot vectors, 1 at constant vectors."""
    rng = np.random.default_rng(19)
    for d in (2, 5, 100):
        for _ in range(n_vectors // 10):
            v = rng.standard_normal(d)
            phi = density_phi(v)
            if not (1.0 / d - 1e-12 <= phi <= 1.0 + 1e-12):
                return False, f"phi out of range: {phi} for d={d}"
        one_hot = np.zeros(d)
        one_hot[rng.integers(d)] = rng.standard_normal() or 1.0
        if abs(density_phi(one_hot) - 1.0 / d) > 1e-12:
            return False, f"one-hot density != 1/d for d={d}"
        const = np.full(d, float(rng.standard_normal() or 1.0))
        if abs(density_phi(const) - 1.0) > 1e-12:
            return False, f"constant density != 1 for d={d}"
    return True, "phi in [1/d, 1] with exact extremes"


def check_l1_preserved(n_vectors: int = 2000) -> tuple[bool, str]:
    """sign_scaled preserves the l1 mass within 1e-12 relative."""
    rng = np.random.default_rng(23)
    spec = CompressorSpec("sign_scaled")
    worst = 0.0
    for d in (2, 10, 100):
        for _ in range(n_vectors // 10):
            v = rng.standard_normal(d)
            c = compress(spec, v)
            l1v, l1c = float(np.abs(v).sum()), float(np.abs(c).sum())
            rel = abs(l1c - l1v) / l1v
            worst = max(worst, rel)
            if rel > 1e-12:
                return False, f"l1 drift {rel:.2e} for d={d}"
    return True, f"worst relative l1 drift {worst:.2e}"


def check_bound_monotonicity() -> tuple[bool, str]:
    """Bound evaluators nonincreasing in delta, nondecreasing in sigma^2."""
    deltas = np.linspace(0.05, 1.0, 20)
    sigmas = np.linspace(0.0, 10.0, 21)
    for f0, L, gamma, T in ((1.0, 1.0, 0.1, 99), (5.0, 2.0, 0.01, 999)):
        for series in (
            [smooth_min_grad_bound(f0, L, 1.0, d, gamma, T) for d in deltas],
            [convex_avg_loss_bound(1.0, gamma, T, 1.0, d) for d in deltas],
            [error_norm_bound(gamma, 1.0, d) for d in deltas],
        ):
            if not all(a >= b - 1e-12 for a, b in zip(series, series[1:])):
                return False, "bound not nonincreasing in delta"
        for series in (
            [smooth_min_grad_bound(f0, L, s, 0.5, gamma, T) for s in sigmas],
            [convex_avg_loss_bound(1.0, gamma, T, s, 0.5) for s in sigmas],
            [error_norm_bound(gamma, s, 0.5) for s in sigmas],
        ):
            if not all(a <= b + 1e-12 for a, b in zip(series, series[1:])):
                return False, "bound not nondecreasing in sigma^2"
    return True, "monotone on the checked grids"


def check_projection_geometry(n_cases: int = 200) -> tuple[bool, str]:
    """Projection idempotence and the Pythagorean split on random spans."""
    rng = np.random.default_rng(29)
    for _ in range(n_cases):
        d = int(rng.integers(2, 12))
        basis = SpanBasis(d)
        for _ in range(int(rng.integers(0, d + 2))):
            span_extend(basis, rng.standard_normal(d))
        v = rng.standard_normal(d)
        pv = project(basis, v)
        if not np.allclose(project(basis, pv), pv, atol=1e-10):
            return False, "projection is not idempotent"
        res = v - pv
        lhs = float(v @ v)
        rhs = float(pv @ pv) + float(res @ res)
        if abs(lhs - rhs) > 1e-8 * max(1.0, lhs):
            return False, f"Pythagoras violated: {lhs} vs {rhs}"
    return True, f"{n_cases} random spans pass"


def check_transcript_identity() -> tuple[bool, str]:
    """x_t - e_t stays on the plain-gradient transcript x0 - gamma sum g_i
    (sum accumulated in compensated arithmetic)."""
    from .optimizers import init_state, step

    oracle = build_oracle("ce3", eps=0.5)
    spec = OptimizerSpec(rule="ec_sgd", gamma=0.05, compressor=CompressorSpec("top_k", k=1))
    oracle_ss, comp_ss = np.random.SeedSequence(3).spawn(2)
    oracle_rng = np.random.default_rng(oracle_ss)
    comp_rng = np.random.default_rng(comp_ss)
    state = init_state(spec, [1.0, 1.0])
    x0 = state.x.copy()
    acc = np.zeros(2)
    kahan_c = np.zeros(2)
    gnorm_sum = 0.0
    worst = 0.0
    for t in range(500):
        g = oracle.sample_gradient(state.x, oracle_rng).g
        state = step(spec, state, g, comp_rng)
        term = -spec.gamma * g
        y = term - kahan_c
        s = acc + y
        kahan_c = (s - acc) - y
        acc = s
        gnorm_sum += float(np.linalg.norm(g))
        dev = float(np.linalg.norm((state.x - state.e) - (x0 + acc)))
        tol = 1e-9 * (1.0 + float(np.linalg.norm(x0)) + spec.gamma * gnorm_sum)
        worst = max(worst, dev / tol)
        if dev > tol:
            return False, f"transcript identity broken at t={t}: deviation {dev:.2e}"
    return True, f"max deviation {worst:.3f} x tolerance"


CHECKS = [
    ("compressor contraction (deterministic kinds)", check_deterministic_contraction),
    ("compressor contraction in expectation (rand_k_feedback)", check_expected_contraction),
    ("unbiased compressor mean and second moment", check_unbiased_compressor),
    ("shared-mask coupling of rand_k kinds", check_mask_coupling),
    ("density range and extremes", check_density_range),
    ("l1 preservation of the scaled sign", check_l1_preserved),
    ("bound monotonicity", check_bound_monotonicity),
    ("projection geometry", check_projection_geometry),
    ("error-feedback transcript identity", check_transcript_identity),
]


def run_selftest(print_fn=print) -> bool:
    all_ok = True
    for name, fn in CHECKS:
        ok, detail = fn()
        all_ok = all_ok and ok
        print_fn(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return all_ok
