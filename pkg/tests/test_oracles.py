"""Benchmark oracles: constructions, pointwise values, sampling laws."""

import math

import numpy as np
import pytest

from eflab.linalg import min_norm_solution
from eflab.oracles import build_oracle, wilson_design


def mc_sample_stats(oracle, x, n_samples, seed):
    rng = np.random.default_rng(seed)
    d = oracle.dim
    acc = np.zeros(d)
    acc_sq = np.zeros(d)
    norm_sq = np.empty(n_samples)
    for i in range(n_samples):
        g = oracle.sample_gradient(x, rng).g
        acc += g
        acc_sq += g * g
        norm_sq[i] = float(g @ g)
    mean = acc / n_samples
    var = np.maximum(acc_sq / n_samples - mean**2, 0.0)
    se = np.sqrt(var / n_samples)
    return mean, se, norm_sq


class TestCe1:
    def test_metadata(self):
        o = build_oracle("ce1")
        assert o.dim == 1
        assert o.meta.sigma_sq == pytest.approx(4.75)
        assert o.meta.f_star == pytest.approx(-0.25)
        np.testing.assert_array_equal(o.meta.x_star, [-1.0])
        assert o.meta.domain == (-1.0, 1.0)

    def test_loss_and_gradient(self):
        o = build_oracle("ce1")
        assert o.loss_value(np.array([0.6])) == pytest.approx(0.15)
        np.testing.assert_array_equal(o.full_gradient(np.array([0.0])), [0.25])

    def test_two_point_distribution(self):
        o = build_oracle("ce1")
        rng = np.random.default_rng(0)
        vals = [float(o.sample_gradient(np.zeros(1), rng).g[0]) for _ in range(40_000)]
        vals = np.array(vals)
        assert set(np.unique(vals)) == {4.0, -1.0}
        p4 = float((vals == 4.0).mean())
        se = math.sqrt(0.25 * 0.75 / len(vals))
        assert abs(p4 - 0.25) <= 4 * se


class TestCe2:
    def test_loss_at_corner(self):
        o = build_oracle("ce2", eps=0.5)
        assert o.loss_value(np.array([1.0, 1.0])) == pytest.approx(1.0)

    def test_subgradient_uses_plus_one_at_kink(self):
        o = build_oracle("ce2", eps=0.5)
        np.testing.assert_allclose(o.full_gradient(np.array([1.0, 1.0])), [1.5, -0.5])
        np.testing.assert_allclose(o.full_gradient(np.array([2.0, 0.0])), [1.5, -0.5])

    def test_deterministic_sampling(self):
        o = build_oracle("ce2", eps=0.5)
        rng = np.random.default_rng(0)
        s = o.sample_gradient(np.array([0.3, -0.8]), rng)
        np.testing.assert_array_equal(s.g, o.full_gradient(np.array([0.3, -0.8])))
        assert s.component_index is None

    def test_eps_validation(self):
        for bad in (0.0, 1.0, -0.2, 2.0):
            with pytest.raises(ValueError):
                build_oracle("ce2", eps=bad)


class TestCe3:
    def test_data_rows(self):
        o = build_oracle("ce3", eps=0.5)
        np.testing.assert_allclose(o.a1, [1.5, -0.5])
        np.testing.assert_allclose(o.a2, [-0.5, 1.5])
        np.testing.assert_array_equal(o.meta.x_star, [0.0, 0.0])
        assert o.meta.f_star == 0.0

    def test_loss_at_corner(self):
        o = build_oracle("ce3", eps=0.5)
        assert o.loss_value(np.array([1.0, 1.0])) == pytest.approx(2.0)

    def test_samples_at_corner(self):
        # 2 <a_i, (1,1)> a_i = 2 a_i since both inner products equal 1
        o = build_oracle("ce3", eps=0.5)
        rng = np.random.default_rng(1)
        seen = set()
        for _ in range(50):
            s = o.sample_gradient(np.array([1.0, 1.0]), rng)
            seen.add((round(s.g[0], 12), round(s.g[1], 12)))
        assert seen == {(3.0, -1.0), (-1.0, 3.0)}

    def test_full_gradient_is_sample_mean(self):
        o = build_oracle("ce3", eps=0.5)
        np.testing.assert_allclose(o.full_gradient(np.array([1.0, 1.0])), [1.0, 1.0])

    def test_sign_trap_on_upper_halfplane(self):
        # both possible samples have sign pattern +-(1,-1) whenever x1+x2 > 0
        o = build_oracle("ce3", eps=0.5)
        rng = np.random.default_rng(2)
        for _ in range(300):
            x = rng.standard_normal(2) * 3.0
            if x[0] + x[1] <= 0:
                x = -x
            if x[0] + x[1] == 0:
                continue
            for a in (o.a1, o.a2):
                g = 2.0 * float(a @ x) * a
                if g[0] == 0.0 and g[1] == 0.0:
                    continue
                pattern = (1.0 if g[0] >= 0 else -1.0, 1.0 if g[1] >= 0 else -1.0)
                assert pattern in {(1.0, -1.0), (-1.0, 1.0)}

    def test_smoothness_constant(self):
        # Hessian of the mean-gradient field is a1 a1^T + a2 a2^T; for
        # eps = 0.5 its eigenvalues are {1, 4}
        o = build_oracle("ce3", eps=0.5)
        assert o.meta.smooth_L == pytest.approx(4.0)


class TestTheorem1:
    def test_sign_patterns_exact(self):
        for i, d in enumerate([2, 5, 20] * 7):
            if i >= 20:
                break
            o = build_oracle("theorem1", seed=300 + i, d=d)
            signs = np.sign(o.A)
            ok = np.all(signs == o.s[None, :], axis=1) | np.all(
                signs == -o.s[None, :], axis=1
            )
            assert ok.all()

    def test_unique_optimum_off_generic_lines(self):
        o = build_oracle("theorem1", seed=7, d=5)
        g_at_star = o.full_gradient(o.meta.x_star)
        assert np.linalg.norm(g_at_star) <= 1e-9
        # optimum not on the sign-pattern line through a random point
        rng = np.random.default_rng(11)
        for _ in range(20):
            x0 = rng.standard_normal(5)
            w = o.meta.x_star - x0
            s_hat = o.s / math.sqrt(5)
            line_dist = np.linalg.norm(w - (w @ s_hat) * s_hat)
            assert line_dist > 1e-6

    def test_needs_enough_rows(self):
        with pytest.raises(ValueError):
            build_oracle("theorem1", d=5, n=3)
        with pytest.raises(ValueError):
            build_oracle("theorem1", d=1)


class TestWilson:
    def test_design_row_patterns(self):
        rng = np.random.default_rng(0)
        A, y = wilson_design(10, rng)
        assert A.shape == (10, 60)
        for i in range(10):
            assert A[i, 0] == y[i]
            assert A[i, 1] == 1.0 and A[i, 2] == 1.0
            width = 1 if y[i] == 1.0 else 5
            start = 3 + 5 * i
            assert np.all(A[i, start : start + width] == 1.0)
            expected_nnz = 4 if y[i] == 1.0 else 8
            assert int((A[i] != 0).sum()) == expected_nnz

    def test_oracle_split_and_rank(self):
        o = build_oracle("wilson", n=200, seed=0)
        assert o.A.shape == (100, 1200)
        assert o.A_test.shape == (100, 1200)
        assert set(o.train_rows) & set(o.test_rows) == set()
        # full row rank: the min-norm solve must succeed with tiny residual
        x = min_norm_solution(o.A, o.y)
        assert np.linalg.norm(o.A @ x - o.y) <= 1e-8 * np.linalg.norm(o.y)

    def test_test_loss_is_mean_squared(self):
        o = build_oracle("wilson", n=20, seed=1)
        x = np.zeros(o.dim)
        # all labels are +-1, so the zero predictor has mean squared error 1
        assert o.test_loss(x) == pytest.approx(1.0)

    def test_requires_even_n(self):
        with pytest.raises(ValueError):
            build_oracle("wilson", n=7)


class TestSparseNoise:
    def test_noise_on_first_coordinate_only(self):
        o = build_oracle("sparse_noise", d=8, noise_std=100.0)
        rng = np.random.default_rng(0)
        x = np.arange(8.0)
        s = o.sample_gradient(x, rng)
        np.testing.assert_array_equal(s.g[1:], x[1:])
        assert s.g[0] != x[0]

    def test_noiseless_mode_is_deterministic(self):
        o = build_oracle("sparse_noise", d=4, noise_std=0.0)
        rng = np.random.default_rng(0)
        x = np.array([1.0, -2.0, 3.0, 0.5])
        np.testing.assert_array_equal(o.sample_gradient(x, rng).g, x)
        assert o.meta.smooth_L == 1.0

    def test_noise_scale(self):
        o = build_oracle("sparse_noise", d=3, noise_std=100.0)
        rng = np.random.default_rng(5)
        xi = [float(o.sample_gradient(np.zeros(3), rng).g[0]) for _ in range(20_000)]
        assert np.std(xi) == pytest.approx(100.0, rel=0.05)


def _test_points(oracle, rng, count=5):
    """Random evaluation points inside the oracle's stated region."""
    pts = []
    for _ in range(count):
        x = rng.standard_normal(oracle.dim)
        if oracle.meta.domain is not None:
            lo, hi = oracle.meta.domain
            x = np.clip(x, lo, hi)
        elif oracle.meta.sigma_region_radius is not None:
            radius = oracle.meta.sigma_region_radius
            x *= 0.5 * radius / max(1.0, float(np.linalg.norm(x)))
        pts.append(x)
    return pts


UNBIASEDNESS_CASES = [
    ("ce1", {}),
    ("ce2", {"eps": 0.5}),
    ("ce3", {"eps": 0.5}),
    ("theorem1", {"d": 5}),
    ("sparse_noise", {"d": 10, "noise_std": 100.0}),
    ("wilson", {"n": 20}),
]


@pytest.mark.parametrize("kind,params", UNBIASEDNESS_CASES)
def test_sample_gradient_unbiased(kind, params):
    oracle = build_oracle(kind, seed=9, **params)
    rng = np.random.default_rng(17)
    n_samples = 100_000
    for x in _test_points(oracle, rng):
        mean, se, _ = mc_sample_stats(oracle, x, n_samples, seed=int(rng.integers(2**31)))
        target = oracle.full_gradient(x)
        dev = np.abs(mean - target)
        assert np.all(dev <= 4.0 * se + 1e-12), f"{kind}: deviation {dev} vs 4SE {4 * se}"


SECOND_MOMENT_CASES = [
    ("ce1", {}),
    ("ce2", {"eps": 0.5}),
    ("ce3", {"eps": 0.5}),
    ("theorem1", {"d": 5}),
    ("sparse_noise", {"d": 10, "noise_std": 100.0}),
]


@pytest.mark.parametrize("kind,params", SECOND_MOMENT_CASES)
def test_second_moment_bound(kind, params):
    oracle = build_oracle(kind, seed=9, **params)
    assert oracle.meta.sigma_sq is not None
    rng = np.random.default_rng(23)
    for x in _test_points(oracle, rng, count=3):
        _, _, norm_sq = mc_sample_stats(oracle, x, 20_000, seed=int(rng.integers(2**31)))
        bound = oracle.meta.sigma_sq
        se = norm_sq.std(ddof=1) / math.sqrt(len(norm_sq))
        assert norm_sq.mean() <= bound * (1.0 + 3.0 * se / max(bound, 1e-300))


def test_unknown_kind_and_leftover_params():
    with pytest.raises(ValueError):
        build_oracle("mystery")
    with pytest.raises(ValueError):
        build_oracle("ce1", banana=1)
