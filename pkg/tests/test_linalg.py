"""Span tracking, projection, and min-norm least squares."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eflab.linalg import (
    DimensionMismatchError,
    RankDeficientError,
    SpanBasis,
    min_norm_solution,
    project,
    span_distance,
    span_extend,
)


def basis_of(*vectors, dim=None):
    dim = dim if dim is not None else len(vectors[0])
    b = SpanBasis(dim)
    for v in vectors:
        span_extend(b, np.asarray(v, dtype=float))
    return b


class TestSpanExtend:
    def test_first_vector_normalized(self):
        b = SpanBasis(2)
        span_extend(b, [3.0, 0.0])
        assert b.rank == 1
        np.testing.assert_allclose(b.vectors(), [[1.0, 0.0]])

    def test_dependent_vector_leaves_basis_unchanged(self):
        b = basis_of([1.0, 0.0])
        span_extend(b, [2.0, 0.0])
        assert b.rank == 1

    def test_one_orthogonalization_step_by_hand(self):
        # residual of (1,1) against q1=(1,0) is (0,1); normalizes to (0,1)
        b = basis_of([1.0, 0.0])
        span_extend(b, [1.0, 1.0])
        assert b.rank == 2
        np.testing.assert_allclose(b.vectors(), [[1.0, 0.0], [0.0, 1.0]], atol=1e-15)

    def test_zero_vector_never_extends(self):
        b = basis_of([1.0, 0.0])
        span_extend(b, [0.0, 0.0])
        assert b.rank == 1

    def test_dimension_mismatch(self):
        b = SpanBasis(2)
        with pytest.raises(DimensionMismatchError):
            span_extend(b, [1.0, 2.0, 3.0])


class TestProject:
    def test_axis_projection(self):
        b = basis_of([1.0, 0.0])
        np.testing.assert_allclose(project(b, [2.0, 3.0]), [2.0, 0.0])

    def test_empty_basis_projects_to_zero(self):
        b = SpanBasis(2)
        np.testing.assert_allclose(project(b, [2.0, 3.0]), [0.0, 0.0])

    def test_full_rank_identity(self):
        b = basis_of([1.0, 0.0], [0.0, 1.0])
        np.testing.assert_allclose(project(b, [2.0, 3.0]), [2.0, 3.0])

    def test_dimension_mismatch(self):
        b = SpanBasis(3)
        with pytest.raises(DimensionMismatchError):
            project(b, [1.0, 2.0])


class TestMinNorm:
    def test_single_row_axis(self):
        x = min_norm_solution([[1.0, 0.0]], [2.0])
        np.testing.assert_allclose(x, [2.0, 0.0])

    def test_single_row_diagonal(self):
        # A A^T = [[2]], alpha = 1, x = A^T alpha = (1, 1)
        x = min_norm_solution([[1.0, 1.0]], [2.0])
        np.testing.assert_allclose(x, [1.0, 1.0])

    def test_identity_block(self):
        x = min_norm_solution([[1.0, 0.0], [0.0, 1.0]], [3.0, 4.0])
        np.testing.assert_allclose(x, [3.0, 4.0])

    def test_residual_contract(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((10, 25))
        y = rng.standard_normal(10)
        x = min_norm_solution(A, y)
        assert np.linalg.norm(A @ x - y) <= 1e-8 * np.linalg.norm(y)

    def test_rank_deficient_rows_raise(self):
        A = [[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]]
        with pytest.raises(RankDeficientError):
            min_norm_solution(A, [1.0, 2.0])

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            min_norm_solution([[np.nan, 1.0]], [1.0])


@st.composite
def seeded_case(draw):
    return draw(st.integers(0, 10**6))


@given(seeded_case())
@settings(max_examples=60, deadline=None)
def test_projection_idempotent(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 10))
    b = SpanBasis(d)
    for _ in range(int(rng.integers(0, d + 2))):
        span_extend(b, rng.standard_normal(d))
    v = 10.0 * rng.standard_normal(d)
    pv = project(b, v)
    np.testing.assert_allclose(project(b, pv), pv, atol=1e-10)


@given(seeded_case())
@settings(max_examples=60, deadline=None)
def test_projection_pythagoras(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 12))
    b = SpanBasis(d)
    for _ in range(int(rng.integers(1, d))):
        span_extend(b, rng.standard_normal(d))
    v = 5.0 * rng.standard_normal(d)
    pv = project(b, v)
    r = v - pv
    lhs = float(v @ v)
    rhs = float(pv @ pv) + float(r @ r)
    assert abs(lhs - rhs) <= 1e-8 * max(1.0, abs(lhs))


@given(seeded_case())
@settings(max_examples=40, deadline=None)
def test_min_norm_lies_in_row_span(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    d = n + int(rng.integers(1, 8))
    A = rng.standard_normal((n, d))
    y = rng.standard_normal(n)
    x = min_norm_solution(A, y)
    b = SpanBasis(d)
    for row in A:
        span_extend(b, row)
    assert span_distance(b, x) <= 1e-8 * max(1.0, float(np.linalg.norm(x)))


@given(seeded_case())
@settings(max_examples=40, deadline=None)
def test_min_norm_beats_null_space_perturbations(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    d = n + int(rng.integers(2, 8))
    A = rng.standard_normal((n, d))
    y = rng.standard_normal(n)
    x = min_norm_solution(A, y)
    # perturb by a random null-space vector: still solves A z = y exactly
    raw = rng.standard_normal(d)
    null = raw - A.T @ np.linalg.solve(A @ A.T, A @ raw)
    z = x + null
    assert np.linalg.norm(A @ z - y) <= 1e-6 * max(1.0, np.linalg.norm(y))
    assert np.linalg.norm(x) <= np.linalg.norm(z) + 1e-12


def test_orthonormality_maintained_under_many_extends():
    rng = np.random.default_rng(42)
    d = 40
    b = SpanBasis(d)
    for _ in range(120):
        # nearly dependent inputs stress the re-orthogonalization
        v = rng.standard_normal(d)
        if b.rank > 0 and rng.random() < 0.5:
            v = project(b, v) + 1e-9 * rng.standard_normal(d)
        span_extend(b, v)
    q = b.vectors()
    gram = q @ q.T
    np.testing.assert_allclose(gram, np.eye(b.rank), atol=1e-9)
