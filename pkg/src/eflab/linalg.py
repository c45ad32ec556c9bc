"""Dense vector/matrix helpers: incremental orthonormal span tracking,
orthogonal projection, and the minimum-norm solution of an underdetermined
least-squares system.

Vectors and matrices are plain float64 numpy arrays. All public operations
reject non-finite input.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg


class DimensionMismatchError(ValueError):
    """Operand dimensions are incompatible."""


class RankDeficientError(np.linalg.LinAlgError):
    """The Gram matrix could not be factorized; rows are linearly dependent."""


def as_vector(v, dim: int | None = None) -> np.ndarray:
    """Coerce `v` to a finite 1-D float64 array, optionally checking its length."""
    arr = np.ascontiguousarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"expected a 1-D vector with >= 1 entry, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("vector contains non-finite entries")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatchError(f"expected dimension {dim}, got {arr.shape[0]}")
    return arr


def as_matrix(a) -> np.ndarray:
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("matrix contains non-finite entries")
    return arr


class SpanBasis:
    """Orthonormal basis of a subspace of R^dim, grown one vector at a time.

    Basis vectors are kept as rows of a (rank, dim) array. Reads are safe from
    any thread once extension stops; extension is single-writer.
    """

    def __init__(self, dim: int, rank_tolerance: float = 1e-10):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        if rank_tolerance <= 0:
            raise ValueError("rank_tolerance must be positive")
        self.dim = int(dim)
        self.rank_tolerance = float(rank_tolerance)
        self._q = np.empty((0, dim), dtype=np.float64)

    @property
    def rank(self) -> int:
        return self._q.shape[0]

    def vectors(self) -> np.ndarray:
        """Copy of the orthonormal basis as a (rank, dim) array."""
        return self._q.copy()

    def __repr__(self):
        return f"SpanBasis(dim={self.dim}, rank={self.rank})"


def project(basis: SpanBasis, v) -> np.ndarray:
    """Orthogonal projection of `v` onto the span of the basis.

    Returns sum_i <q_i, v> q_i; the zero vector for an empty basis.
    """
    v = as_vector(v, basis.dim)
    if basis.rank == 0:
        return np.zeros(basis.dim)
    q = basis._q
    return q.T @ (q @ v)


def residual(basis: SpanBasis, v) -> np.ndarray:
    """Component of `v` orthogonal to the span (v - project(basis, v))."""
    v = as_vector(v, basis.dim)
    if basis.rank == 0:
        return v.copy()
    q = basis._q
    return v - q.T @ (q @ v)


def span_distance(basis: SpanBasis, v) -> float:
    """Euclidean distance from `v` to the span of the basis."""
    return float(np.linalg.norm(residual(basis, v)))


def span_extend(basis: SpanBasis, v) -> SpanBasis:
    """Extend the basis to cover span(basis) + span{v}; mutates and returns it.

    If the residual of `v` after projection has norm <= rank_tolerance *
    max(1, ||v||), the vector is considered dependent (or degenerate) and the
    basis is unchanged. Otherwise the residual is re-orthogonalized once more
    against the basis before normalization, which keeps the basis orthonormal
    to working precision even for nearly dependent inputs.
    """
    v = as_vector(v, basis.dim)
    threshold = basis.rank_tolerance * max(1.0, float(np.linalg.norm(v)))
    r = residual(basis, v)
    rnorm = float(np.linalg.norm(r))
    if rnorm <= threshold:
        return basis
    if basis.rank > 0:
        q = basis._q
        r = r - q.T @ (q @ r)
        rnorm = float(np.linalg.norm(r))
        if rnorm <= threshold:
            return basis
    if basis.rank >= basis.dim:
        # numerically impossible to exceed the ambient dimension
        return basis
    basis._q = np.vstack([basis._q, r / rnorm])
    return basis


def min_norm_solution(A, y) -> np.ndarray:
    """Smallest-norm x with A x = y for a full-row-rank A (n <= d).

    Solves (A A^T) alpha = y by Cholesky factorization and returns A^T alpha.
    A rank-deficient Gram matrix raises RankDeficientError; no regularization
    is applied.
    """
    A = as_matrix(A)
    y = as_vector(y, A.shape[0])
    gram = A @ A.T
    try:
        factor = scipy.linalg.cho_factor(gram, lower=True)
    except np.linalg.LinAlgError as err:
        raise RankDeficientError(
            f"Cholesky factorization of the {gram.shape[0]}x{gram.shape[0]} "
            f"Gram matrix failed: {err}"
        ) from err
    alpha = scipy.linalg.cho_solve(factor, y)
    return A.T @ alpha
