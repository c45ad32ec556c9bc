"""Stochastic first-order oracles for the analytic benchmark problems.

Every oracle exposes the objective value, the full (mean) gradient, and a
single-sample stochastic gradient that is unbiased for the full gradient.
For finite-sum objectives f(x) = sum_i l_i(<a_i, x>), loss_value reports the
sum while the gradient oracle uses the mean-of-summands field (1/n) sum_i
grad l_i, so that one uniformly sampled summand gradient is an unbiased
estimate. Subgradient selection at kinks uses sgn(0) = +1.

Registered kinds (see build_oracle):

  ce1           1-D linear f(x) = x/4 on the box [-1, 1]; gradient noise is
                two-point (4 w.p. 1/4, -1 w.p. 3/4), mean 1/4.
  ce2           f(x) = eps|x1+x2| + |x1-x2|, deterministic subgradient.
  ce3           two-point least squares with rows +-(1,-1) + eps(1,1); every
                sampled gradient has sign pattern +-(1,-1).
  theorem1      n scalar quadratics on data rows that all share one sign
                pattern s up to global flips, with a unique optimum.
  sparse_noise  f(x) = ||x||^2 / 2; Gaussian noise on the first coordinate
                only (a noiseless smooth quadratic when noise_std = 0).
  wilson        over-parameterized least squares on the synthetic block
                design of d = 6n columns, split evenly into train and test.
  lsq           generic least squares on a supplied matrix and labels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .linalg import as_matrix, as_vector


@dataclass(frozen=True)
class OracleMeta:
    """Problem metadata: second-moment bound, smoothness, optimum.

    sigma_sq bounds E||g||^2; when sigma_region_radius is set the bound only
    holds on the ball ||x|| <= radius (region-conditional), otherwise on the
    stated domain. smooth_L is the Lipschitz constant of the mean-gradient
    field, None for non-smooth objectives. domain is None (unconstrained) or
    a (lo, hi) box.
    """

    sigma_sq: float | None = None
    smooth_L: float | None = None
    f_star: float | None = None
    x_star: np.ndarray | None = None
    domain: tuple[float, float] | None = None
    sigma_region_radius: float | None = None


class GradientSample(NamedTuple):
    g: np.ndarray
    component_index: int | None


def _subgrad_sign(v: float) -> float:
    """Sign used for subgradient selection; +1 at exactly 0."""
    return 1.0 if v >= 0 else -1.0


class Oracle:
    """Base interface. Subclasses set dim and meta at construction."""

    dim: int
    meta: OracleMeta
    kind: str = "?"
    # oracles that implement the *_scalar hooks set this; the optimizer's
    # low-dimension fast path requires it
    supports_scalar = False

    def loss_value(self, x) -> float:
        raise NotImplementedError

    def full_gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def sample_gradient(self, x, rng: np.random.Generator) -> GradientSample:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class BoxedLinearOracle(Oracle):
    """min f(x) = x/4 over x in [-1, 1], optimum at -1.

    The stochastic gradient is 4 with probability 1/4 and -1 otherwise
    (E g = 1/4 = f'), with E g^2 = 4.75.
    """

    kind = "ce1"
    supports_scalar = True

    def __init__(self):
        self.dim = 1
        self.meta = OracleMeta(
            sigma_sq=4.75,
            smooth_L=0.0,
            f_star=-0.25,
            x_star=np.array([-1.0]),
            domain=(-1.0, 1.0),
        )
        self._g_rare = np.array([4.0])
        self._g_common = np.array([-1.0])
        self._g_rare_l = [4.0]
        self._g_common_l = [-1.0]

    def loss_value(self, x) -> float:
        return 0.25 * float(x[0])

    def full_gradient(self, x) -> np.ndarray:
        return np.array([0.25])

    def sample_gradient(self, x, rng) -> GradientSample:
        if rng.random() < 0.25:
            return GradientSample(self._g_rare, 0)
        return GradientSample(self._g_common, 1)

    # scalar hooks: operate on plain float lists, same rng consumption
    def loss_scalar(self, xs) -> float:
        return 0.25 * xs[0]

    def full_gradient_scalar(self, xs):
        return [0.25]

    def sample_scalar(self, xs, rng):
        # caller treats the sample as read-only; reuse the cached lists
        if rng.random() < 0.25:
            return (self._g_rare_l, 0)
        return (self._g_common_l, 1)


class AbsSkewOracle(Oracle):
    """f(x) = eps |x1 + x2| + |x1 - x2| with 0 < eps < 1; optimum at (0, 0).

    Deterministic: the sampled gradient equals the selected subgradient
    sgn(x1+x2) * eps * (1,1) + sgn(x1-x2) * (1,-1), with sgn(0) = +1.
    """

    kind = "ce2"
    supports_scalar = True

    def __init__(self, eps: float = 0.5):
        if not 0.0 < eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {eps}")
        self.eps = float(eps)
        self.dim = 2
        self.meta = OracleMeta(
            sigma_sq=2.0 * (1.0 + eps * eps),
            smooth_L=None,
            f_star=0.0,
            x_star=np.zeros(2),
        )

    def loss_value(self, x) -> float:
        return self.eps * abs(float(x[0]) + float(x[1])) + abs(float(x[0]) - float(x[1]))

    def full_gradient(self, x) -> np.ndarray:
        s1 = _subgrad_sign(float(x[0]) + float(x[1]))
        s2 = _subgrad_sign(float(x[0]) - float(x[1]))
        return np.array([s1 * self.eps + s2, s1 * self.eps - s2])

    def sample_gradient(self, x, rng) -> GradientSample:
        return GradientSample(self.full_gradient(x), None)

    def loss_scalar(self, xs) -> float:
        return self.eps * abs(xs[0] + xs[1]) + abs(xs[0] - xs[1])

    def full_gradient_scalar(self, xs):
        s1 = _subgrad_sign(xs[0] + xs[1])
        s2 = _subgrad_sign(xs[0] - xs[1])
        return [s1 * self.eps + s2, s1 * self.eps - s2]

    def sample_scalar(self, xs, rng):
        return (self.full_gradient_scalar(xs), None)


class SkewedPairQuadratic(Oracle):
    """f(x) = <a1,x>^2 + <a2,x>^2 with a_{1,2} = +-(1,-1) + eps(1,1).

    Samples grad of one squared term uniformly: g = 2 <a_i, x> a_i, whose
    sign pattern is +-(1,-1) everywhere. full_gradient is the two-term mean.
    """

    kind = "ce3"
    supports_scalar = True

    def __init__(self, eps: float = 0.5, region_radius: float = 2.0):
        if not 0.0 < eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {eps}")
        self.eps = float(eps)
        self.dim = 2
        self.a1 = np.array([1.0 + eps, -1.0 + eps])
        self.a2 = np.array([-1.0 + eps, 1.0 + eps])
        self._a1t = (1.0 + eps, -1.0 + eps)  # python-float twins for the scalar path
        self._a2t = (-1.0 + eps, 1.0 + eps)
        hess = np.outer(self.a1, self.a1) + np.outer(self.a2, self.a2)
        a_norm4 = float(self.a1 @ self.a1) ** 2
        self.meta = OracleMeta(
            sigma_sq=4.0 * a_norm4 * region_radius**2,
            smooth_L=float(np.linalg.eigvalsh(hess).max()),
            f_star=0.0,
            x_star=np.zeros(2),
            sigma_region_radius=float(region_radius),
        )

    def loss_value(self, x) -> float:
        z1 = self.a1[0] * float(x[0]) + self.a1[1] * float(x[1])
        z2 = self.a2[0] * float(x[0]) + self.a2[1] * float(x[1])
        return z1 * z1 + z2 * z2

    def full_gradient(self, x) -> np.ndarray:
        z1 = self.a1[0] * float(x[0]) + self.a1[1] * float(x[1])
        z2 = self.a2[0] * float(x[0]) + self.a2[1] * float(x[1])
        return z1 * self.a1 + z2 * self.a2

    def sample_gradient(self, x, rng) -> GradientSample:
        i = int(rng.integers(2))
        a = self.a1 if i == 0 else self.a2
        z = a[0] * float(x[0]) + a[1] * float(x[1])
        return GradientSample((2.0 * z) * a, i)

    def loss_scalar(self, xs) -> float:
        z1 = self._a1t[0] * xs[0] + self._a1t[1] * xs[1]
        z2 = self._a2t[0] * xs[0] + self._a2t[1] * xs[1]
        return z1 * z1 + z2 * z2

    def full_gradient_scalar(self, xs):
        z1 = self._a1t[0] * xs[0] + self._a1t[1] * xs[1]
        z2 = self._a2t[0] * xs[0] + self._a2t[1] * xs[1]
        return [
            z1 * self._a1t[0] + z2 * self._a2t[0],
            z1 * self._a1t[1] + z2 * self._a2t[1],
        ]

    def sample_scalar(self, xs, rng):
        i = int(rng.integers(2))
        a = self._a1t if i == 0 else self._a2t
        z = a[0] * xs[0] + a[1] * xs[1]
        return ([2.0 * z * a[0], 2.0 * z * a[1]], i)


class SignAlignedLeastSquares(Oracle):
    """n shifted scalar quadratics l_i(z) = (z - b_i)^2 on rows a_i whose sign
    patterns all equal +-s for one s in {-1,1}^d.

    Rows are a_i = eta_i * (m_i * s) with entrywise magnitudes m_i drawn from
    U(0.5, 1.5) and global flips eta_i in {-1, +1}; shifts b_i ~ N(0, 1).
    With n >= d the optimum x_star is the unique normal-equations solution,
    off any fixed 1-D line almost surely.
    """

    kind = "theorem1"
    supports_scalar = True

    def __init__(self, d: int, n: int | None = None, seed: int = 0, region_radius: float = 4.0):
        if d < 2:
            raise ValueError("theorem1 oracle requires d >= 2")
        n = int(n) if n is not None else d + 2
        if n < d:
            raise ValueError(f"need n >= d for a unique optimum, got n={n}, d={d}")
        rng = np.random.default_rng(seed)
        self.dim = int(d)
        self.n = n
        self.s = np.where(rng.integers(0, 2, d) == 1, 1.0, -1.0)
        mags = rng.uniform(0.5, 1.5, size=(n, d))
        eta = np.where(rng.integers(0, 2, n) == 1, 1.0, -1.0)
        self.A = eta[:, None] * (mags * self.s[None, :])
        self.b = rng.standard_normal(n)
        gram = self.A.T @ self.A
        if np.linalg.matrix_rank(gram) < d:
            raise ValueError("degenerate draw: data rows do not span R^d")
        x_star = np.linalg.solve(gram, self.A.T @ self.b)
        f_star = float(((self.A @ x_star - self.b) ** 2).sum())
        row_sq = (self.A**2).sum(axis=1)
        sigma = 4.0 * float(
            np.mean(row_sq * (np.sqrt(row_sq) * region_radius + np.abs(self.b)) ** 2)
        )
        self.meta = OracleMeta(
            sigma_sq=sigma,
            smooth_L=float(np.linalg.eigvalsh((2.0 / n) * gram).max()),
            f_star=f_star,
            x_star=x_star,
            sigma_region_radius=float(region_radius),
        )
        self._rows = [self.A[i].tolist() for i in range(n)]
        self._b_list = self.b.tolist()

    def loss_value(self, x) -> float:
        r = self.A @ x - self.b
        return float(r @ r)

    def full_gradient(self, x) -> np.ndarray:
        r = self.A @ x - self.b
        return (2.0 / self.n) * (self.A.T @ r)

    def sample_gradient(self, x, rng) -> GradientSample:
        i = int(rng.integers(self.n))
        a = self.A[i]
        z = float(a @ x) - self.b[i]
        return GradientSample((2.0 * z) * a, i)

    def loss_scalar(self, xs) -> float:
        total = 0.0
        for i in range(self.n):
            a = self._rows[i]
            z = -self._b_list[i]
            for j in range(self.dim):
                z += a[j] * xs[j]
            total += z * z
        return total

    def full_gradient_scalar(self, xs):
        out = [0.0] * self.dim
        for i in range(self.n):
            a = self._rows[i]
            z = -self._b_list[i]
            for j in range(self.dim):
                z += a[j] * xs[j]
            w = 2.0 * z / self.n
            for j in range(self.dim):
                out[j] += w * a[j]
        return out

    def sample_scalar(self, xs, rng):
        i = int(rng.integers(self.n))
        a = self._rows[i]
        z = -self._b_list[i]
        for aj, xj in zip(a, xs):
            z += aj * xj
        w = 2.0 * z
        return ([w * aj for aj in a], i)


class SparseNoiseQuadratic(Oracle):
    """f(x) = ||x||^2 / 2 with Gaussian noise added to the first gradient
    coordinate only; noise_std = 0 gives a deterministic smooth quadratic."""

    kind = "sparse_noise"

    def __init__(self, d: int = 100, noise_std: float = 100.0, region_radius: float = 20.0):
        if d < 1:
            raise ValueError("d must be >= 1")
        if noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        self.dim = int(d)
        self.noise_std = float(noise_std)
        self.meta = OracleMeta(
            sigma_sq=region_radius**2 + noise_std**2,
            smooth_L=1.0,
            f_star=0.0,
            x_star=np.zeros(d),
            sigma_region_radius=float(region_radius),
        )

    def loss_value(self, x) -> float:
        return 0.5 * float(x @ x)

    def full_gradient(self, x) -> np.ndarray:
        return np.array(x, dtype=np.float64)

    def sample_gradient(self, x, rng) -> GradientSample:
        g = np.array(x, dtype=np.float64)
        if self.noise_std > 0.0:
            g[0] += self.noise_std * rng.standard_normal()
        return GradientSample(g, None)


class DenseLeastSquares(Oracle):
    """f(x) = ||A x - y||^2 on a fixed design; samples one row uniformly."""

    kind = "lsq"

    def __init__(self, A, y, region_radius: float | None = None):
        self.A = as_matrix(A)
        self.y = as_vector(y, self.A.shape[0])
        self.n, self.dim = self.A.shape
        sigma = None
        if region_radius is not None:
            row_sq = (self.A**2).sum(axis=1)
            sigma = 4.0 * float(
                np.mean(row_sq * (np.sqrt(row_sq) * region_radius + np.abs(self.y)) ** 2)
            )
        # lambda_max(A^T A) = lambda_max(A A^T); use the smaller Gram
        gram = self.A @ self.A.T if self.n <= self.dim else self.A.T @ self.A
        self.meta = OracleMeta(
            sigma_sq=sigma,
            smooth_L=(2.0 / self.n) * float(np.linalg.eigvalsh(gram).max()),
            sigma_region_radius=region_radius,
        )

    def loss_value(self, x) -> float:
        r = self.A @ x - self.y
        return float(r @ r)

    def full_gradient(self, x) -> np.ndarray:
        r = self.A @ x - self.y
        return (2.0 / self.n) * (self.A.T @ r)

    def sample_gradient(self, x, rng) -> GradientSample:
        i = int(rng.integers(self.n))
        a = self.A[i]
        z = float(a @ x) - self.y[i]
        return GradientSample((2.0 * z) * a, i)


def wilson_design(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Synthetic block design: n rows, d = 6n columns, labels y uniform on
    {-1, +1}. Row i carries y_i in column 0, ones in columns 1 and 2, and a
    run of ones of length 2(1 - y_i) + 1 starting at column 3 + 5i; rows have
    4 nonzeros when y_i = +1 and 8 when y_i = -1, and are linearly
    independent by the disjoint runs."""
    if n < 1:
        raise ValueError("n must be >= 1")
    y = np.where(rng.integers(0, 2, n) == 1, 1.0, -1.0)
    A = np.zeros((n, 6 * n))
    for i in range(n):
        A[i, 0] = y[i]
        A[i, 1] = 1.0
        A[i, 2] = 1.0
        start = 3 + 5 * i
        width = int(2 * (1 - y[i]) + 1)
        A[i, start : start + width] = 1.0
    return A, y


class SplitBlockLeastSquares(DenseLeastSquares):
    """Over-parameterized least squares on the block design, with the rows
    split equally and at random into a train half (the objective) and a test
    half (reported separately via test_loss)."""

    kind = "wilson"

    def __init__(self, n: int = 200, seed: int = 0):
        if n < 2 or n % 2 != 0:
            raise ValueError("wilson oracle needs an even n >= 2")
        rng = np.random.default_rng(seed)
        A, y = wilson_design(n, rng)
        perm = rng.permutation(n)
        train = np.sort(perm[: n // 2])
        test = np.sort(perm[n // 2 :])
        super().__init__(A[train], y[train])
        self.kind = "wilson"
        self.n_total = n
        self.A_test = A[test]
        self.y_test = y[test]
        self.train_rows = train
        self.test_rows = test

    def test_loss(self, x) -> float:
        """Per-sample mean squared test error ||A_test x - y_test||^2 / n_test."""
        r = self.A_test @ x - self.y_test
        return float(r @ r) / self.A_test.shape[0]


_BUILDERS = {
    "ce1": lambda seed, p: BoxedLinearOracle(),
    "ce2": lambda seed, p: AbsSkewOracle(eps=float(p.pop("eps", 0.5))),
    "ce3": lambda seed, p: SkewedPairQuadratic(
        eps=float(p.pop("eps", 0.5)), region_radius=float(p.pop("region_radius", 2.0))
    ),
    "theorem1": lambda seed, p: SignAlignedLeastSquares(
        d=int(p.pop("d")),
        n=int(p.pop("n")) if "n" in p else None,
        seed=seed,
        region_radius=float(p.pop("region_radius", 4.0)),
    ),
    "sparse_noise": lambda seed, p: SparseNoiseQuadratic(
        d=int(p.pop("d", 100)),
        noise_std=float(p.pop("noise_std", 100.0)),
        region_radius=float(p.pop("region_radius", 20.0)),
    ),
    "wilson": lambda seed, p: SplitBlockLeastSquares(n=int(p.pop("n", 200)), seed=seed),
    "lsq": lambda seed, p: DenseLeastSquares(
        p.pop("matrix"), p.pop("labels"), region_radius=p.pop("region_radius", None)
    ),
}

ORACLE_KINDS = tuple(_BUILDERS)


def build_oracle(kind: str, seed: int = 0, **params) -> Oracle:
    """Construct an oracle by kind name. `seed` drives data generation for
    the randomized constructions (theorem1, wilson); sampling randomness is
    always supplied per call."""
    if kind not in _BUILDERS:
        raise ValueError(f"unknown oracle kind {kind!r}; expected one of {ORACLE_KINDS}")
    params = dict(params)
    oracle = _BUILDERS[kind](seed, params)
    if params:
        raise ValueError(f"unused oracle parameters for {kind!r}: {sorted(params)}")
    return oracle
