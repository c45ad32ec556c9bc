"""Compression operators: pointwise examples, contract floors, randomized
kinds, density, and bit accounting."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eflab.compressors import (
    CompressorSpec,
    bits_per_step,
    compress,
    contraction_delta,
    density_phi,
    parse_compressor,
    rand_mask_indices,
)
from eflab.selftest import (
    check_deterministic_contraction,
    check_expected_contraction,
    check_mask_coupling,
    check_unbiased_compressor,
)


class TestCompress:
    def test_sign_scaled_by_hand(self):
        # ||v||_1 = 4, d = 2 -> scale 2
        out = compress(CompressorSpec("sign_scaled"), [3.0, -1.0])
        np.testing.assert_array_equal(out, [2.0, -2.0])

    def test_sign_scaled_uniform_magnitudes_exact(self):
        out = compress(CompressorSpec("sign_scaled"), [1.0, 1.0])
        np.testing.assert_array_equal(out, [1.0, 1.0])

    def test_top_k_keeps_largest(self):
        out = compress(CompressorSpec("top_k", k=1), [3.0, -1.0])
        np.testing.assert_array_equal(out, [3.0, 0.0])

    def test_identity(self):
        v = np.array([0.5, -2.0, 7.0])
        np.testing.assert_array_equal(compress(CompressorSpec("identity"), v), v)

    def test_sign_raw(self):
        out = compress(CompressorSpec("sign_raw"), [3.0, -1.0, 0.5])
        np.testing.assert_array_equal(out, [1.0, -1.0, 1.0])

    def test_top_k_tie_lower_index_wins(self):
        out = compress(CompressorSpec("top_k", k=2), [1.0, -1.0, 1.0])
        np.testing.assert_array_equal(out, [1.0, -1.0, 0.0])

    def test_zero_vector_maps_to_zero_for_every_kind(self):
        rng = np.random.default_rng(0)
        z = np.zeros(4)
        for spec in (
            CompressorSpec("identity"),
            CompressorSpec("sign_scaled"),
            CompressorSpec("sign_raw"),
            CompressorSpec("top_k", k=2),
            CompressorSpec("rand_k_unbiased", k=2),
            CompressorSpec("rand_k_feedback", k=2),
        ):
            np.testing.assert_array_equal(compress(spec, z, rng), z)

    def test_sign_zero_conventions(self):
        v = np.array([1.0, 0.0, -1.0])
        plus = compress(CompressorSpec("sign_raw"), v)
        np.testing.assert_array_equal(plus, [1.0, 1.0, -1.0])
        zero = compress(CompressorSpec("sign_raw", sign_zero="zero"), v)
        np.testing.assert_array_equal(zero, [1.0, 0.0, -1.0])

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            compress(CompressorSpec("top_k", k=5), [1.0, 2.0])

    def test_rand_k_requires_rng(self):
        with pytest.raises(ValueError):
            compress(CompressorSpec("rand_k_unbiased", k=1), [1.0, 2.0])

    def test_rand_k_masks_k_coordinates(self):
        rng = np.random.default_rng(3)
        v = np.arange(1.0, 11.0)
        out = compress(CompressorSpec("rand_k_feedback", k=4), v, rng)
        nz = out != 0
        assert nz.sum() == 4
        np.testing.assert_array_equal(out[nz], v[nz])


class TestContractionDelta:
    def test_sign_scaled_by_hand(self):
        # c = (2,-2): ||c-v||^2 = 1+1 = 2, ||v||^2 = 10 -> 0.8
        v = np.array([3.0, -1.0])
        c = compress(CompressorSpec("sign_scaled"), v)
        assert contraction_delta(v, c) == pytest.approx(0.8, abs=1e-12)

    def test_identity_is_one(self):
        v = np.array([0.3, 4.0, -2.0])
        assert contraction_delta(v, v.copy()) == 1.0

    def test_top_1_by_hand(self):
        # residual (0,-1): 1 - 1/10
        v = np.array([3.0, -1.0])
        c = compress(CompressorSpec("top_k", k=1), v)
        assert contraction_delta(v, c) == pytest.approx(0.9, abs=1e-12)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            contraction_delta([0.0, 0.0], [0.0, 0.0])


class TestDensity:
    def test_one_hot_is_one_over_d(self):
        assert density_phi([1.0, 0.0, 0.0, 0.0]) == pytest.approx(0.25, abs=1e-15)

    def test_constant_vector_is_one(self):
        for c in (0.7, -3.0):
            assert density_phi([c] * 5) == pytest.approx(1.0, abs=1e-12)

    def test_by_hand(self):
        # 16 / (2 * 10)
        assert density_phi([3.0, -1.0]) == pytest.approx(0.8, abs=1e-15)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            density_phi([0.0, 0.0])


class TestBits:
    def test_sign_scaled_d1000(self):
        assert bits_per_step(CompressorSpec("sign_scaled"), 1000) == 1032

    def test_identity_d4(self):
        assert bits_per_step(CompressorSpec("identity"), 4) == 128

    def test_top_k_indices_cost(self):
        # 2 * (32 + 10)
        assert bits_per_step(CompressorSpec("top_k", k=2), 1024) == 84

    def test_rand_k_same_cost_as_top_k(self):
        assert bits_per_step(CompressorSpec("rand_k_unbiased", k=3), 100) == 3 * (32 + 7)


class TestSpecParsing:
    def test_round_trip_tokens(self):
        assert parse_compressor("sign_scaled").kind == "sign_scaled"
        spec = parse_compressor("top_k:3")
        assert spec.kind == "top_k" and spec.k == 3

    def test_bad_tokens(self):
        for bad in ("top_k", "identity:2", "nope", "rand_k_unbiased:x"):
            with pytest.raises(ValueError):
                parse_compressor(bad)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            CompressorSpec("top_k")
        with pytest.raises(ValueError):
            CompressorSpec("identity", k=2)
        with pytest.raises(ValueError):
            CompressorSpec("sign_scaled", sign_zero="sometimes")


# --- randomized-kind contracts (shared with `ef-lab selftest`) ---


def test_deterministic_contraction_floors():
    ok, detail = check_deterministic_contraction(n_vectors=2000)
    assert ok, detail


def test_feedback_contraction_in_expectation():
    ok, detail = check_expected_contraction(n_samples=4000)
    assert ok, detail


def test_unbiased_mean_and_second_moment():
    ok, detail = check_unbiased_compressor(n_samples=40_000)
    assert ok, detail


def test_shared_mask_identity_exact():
    ok, detail = check_mask_coupling()
    assert ok, detail


def test_mask_uniformity():
    d, k, n = 12, 5, 20_000
    rng = np.random.default_rng(5)
    counts = np.zeros(d)
    for _ in range(n):
        for j in rand_mask_indices(d, k, rng):
            counts[j] += 1
    freq = counts / n
    se = np.sqrt((k / d) * (1 - k / d) / n)
    assert np.all(np.abs(freq - k / d) <= 5 * se)


@given(st.integers(0, 10**6))
@settings(max_examples=80, deadline=None)
def test_density_range_property(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 30))
    style = rng.integers(3)
    if style == 0:
        v = rng.standard_normal(d)
    elif style == 1:
        v = np.zeros(d)
        v[rng.integers(d)] = rng.standard_normal() or 1.0
    else:
        v = np.full(d, float(rng.standard_normal() or 1.0))
    if not np.any(v):
        v[0] = 1.0
    phi = density_phi(v)
    assert 1.0 / d - 1e-12 <= phi <= 1.0 + 1e-12


@given(st.integers(0, 10**6))
@settings(max_examples=80, deadline=None)
def test_l1_preservation_property(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 50))
    v = rng.standard_normal(d) * 10.0 ** rng.integers(-3, 4)
    if not np.any(v):
        v[0] = 1.0
    c = compress(CompressorSpec("sign_scaled"), v)
    l1v = float(np.abs(v).sum())
    assert abs(float(np.abs(c).sum()) - l1v) <= 1e-12 * l1v


@given(st.integers(0, 10**6))
@settings(max_examples=80, deadline=None)
def test_sign_scaled_delta_equals_density(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 40))
    v = rng.standard_normal(d)
    if not np.any(v):
        v[0] = 1.0
    c = compress(CompressorSpec("sign_scaled"), v)
    assert contraction_delta(v, c) == pytest.approx(density_phi(v), abs=1e-12)
