"""Vector compression operators and their measured contraction quality.

A compressor C maps R^d -> R^d and is delta-approximate on a vector v when
||C(v) - v||^2 <= (1 - delta) ||v||^2. The kinds implemented here:

  identity            C(v) = v                              delta = 1
  sign_scaled         C(v) = (||v||_1 / d) * sgn(v)         delta = phi(v)
  sign_raw            C(v) = sgn(v)                         no guarantee
  top_k               keep the k largest-|.| entries        delta >= k/d
  rand_k_unbiased     (d/k) * (v masked to k random coords) unbiased, expands
  rand_k_feedback     v masked to k random coordinates      delta >= k/d (expected)

phi(v) = ||v||_1^2 / (d ||v||_2^2) is the density of v, in [1/d, 1].
C(0) = 0 for every kind.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_vector

KINDS = ("identity", "sign_scaled", "sign_raw", "top_k", "rand_k_unbiased", "rand_k_feedback")
K_FAMILY = ("top_k", "rand_k_unbiased", "rand_k_feedback")
SIGN_ZERO_CONVENTIONS = ("plus_one", "zero")


@dataclass(frozen=True)
class CompressorSpec:
    """Tagged description of a compression operator.

    sign_zero picks the image of sgn at exactly 0 for the sign kinds:
    "plus_one" maps 0 to +1 (default), "zero" maps 0 to 0.
    """

    kind: str
    k: int | None = None
    sign_zero: str = "plus_one"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown compressor kind {self.kind!r}; expected one of {KINDS}")
        if self.kind in K_FAMILY:
            if self.k is None or int(self.k) < 1:
                raise ValueError(f"{self.kind} requires k >= 1, got {self.k!r}")
            object.__setattr__(self, "k", int(self.k))
        elif self.k is not None:
            raise ValueError(f"{self.kind} takes no k parameter")
        if self.sign_zero not in SIGN_ZERO_CONVENTIONS:
            raise ValueError(f"sign_zero must be one of {SIGN_ZERO_CONVENTIONS}")

    def label(self) -> str:
        return f"{self.kind}:{self.k}" if self.kind in K_FAMILY else self.kind


def parse_compressor(text: str) -> CompressorSpec:
    """Parse a config token like "sign_scaled" or "top_k:3"."""
    name, sep, arg = text.strip().partition(":")
    if name in K_FAMILY:
        if not sep:
            raise ValueError(f"{name} needs a k, e.g. {name}:4")
        try:
            k = int(arg)
        except ValueError:
            raise ValueError(f"bad k in compressor {text!r}") from None
        return CompressorSpec(name, k=k)
    if sep:
        raise ValueError(f"compressor {name!r} takes no argument")
    return CompressorSpec(name)


def sgn(v: np.ndarray, zero_value: float = 1.0) -> np.ndarray:
    """Elementwise sign with a configurable image of 0 (+0.0 and -0.0 alike)."""
    if zero_value == 0.0:
        return np.sign(v)
    out = np.where(v > 0, 1.0, -1.0)
    out[v == 0] = zero_value
    return out


def rand_mask_indices(d: int, k: int, rng: np.random.Generator) -> list[int]:
    """k distinct coordinates drawn uniformly without replacement.

    Seeded Fisher-Yates prefix; shared by every code path that needs the mask
    so that identical rng states yield identical masks.
    """
    pool = list(range(d))
    for i in range(k):
        j = int(rng.integers(i, d))
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:k]


def compress(spec: CompressorSpec, v, rng: np.random.Generator | None = None) -> np.ndarray:
    """Apply the operator described by `spec` to `v`.

    `rng` is consumed only by the rand_k kinds. C(0) = 0 for every kind.
    """
    v = as_vector(v)
    d = v.shape[0]
    if spec.kind in K_FAMILY and spec.k > d:
        raise ValueError(f"k={spec.k} out of range for dimension {d}")
    if not np.any(v):
        return np.zeros(d)
    if spec.kind == "identity":
        return v.copy()
    zero_value = 1.0 if spec.sign_zero == "plus_one" else 0.0
    if spec.kind == "sign_scaled":
        return (np.abs(v).sum() / d) * sgn(v, zero_value)
    if spec.kind == "sign_raw":
        return sgn(v, zero_value)
    if spec.kind == "top_k":
        order = np.argsort(-np.abs(v), kind="stable")  # ties: lower index wins
        out = np.zeros(d)
        keep = order[: spec.k]
        out[keep] = v[keep]
        return out
    if rng is None:
        raise ValueError(f"{spec.kind} requires an rng")
    idx = rand_mask_indices(d, spec.k, rng)
    out = np.zeros(d)
    out[idx] = v[idx]
    if spec.kind == "rand_k_unbiased":
        out *= d / spec.k
    return out


def contraction_delta(v, compressed) -> float:
    """Measured contraction 1 - ||c - v||^2 / ||v||^2, clamped to [0, 1].

    Undefined (raises) for v = 0.
    """
    v = as_vector(v)
    c = as_vector(compressed, v.shape[0])
    vv = float(v @ v)
    if vv == 0.0:
        raise ValueError("contraction_delta is undefined for the zero vector")
    diff = c - v
    delta = 1.0 - float(diff @ diff) / vv
    return min(1.0, max(0.0, delta))


def density_phi(v) -> float:
    """Density ||v||_1^2 / (d ||v||_2^2) of a nonzero vector; in [1/d, 1]."""
    v = as_vector(v)
    vv = float(v @ v)
    if vv == 0.0:
        raise ValueError("density is undefined for the zero vector")
    l1 = float(np.abs(v).sum())
    return l1 * l1 / (v.shape[0] * vv)


def guaranteed_delta(spec: CompressorSpec, d: int, v=None) -> float | None:
    """A priori contraction guarantee for dimension d, when one exists.

    identity -> 1; top_k and rand_k_feedback -> k/d (the latter in
    expectation); sign_scaled -> phi(v) when v is supplied (input-dependent),
    else the worst case 1/d; sign_raw and rand_k_unbiased -> None.
    """
    if spec.kind == "identity":
        return 1.0
    if spec.kind in ("top_k", "rand_k_feedback"):
        return spec.k / d
    if spec.kind == "sign_scaled":
        return density_phi(v) if v is not None else 1.0 / d
    return None


def bits_per_step(spec: CompressorSpec, d: int) -> int:
    """Bits transmitted per step: sign kinds d + 32 (signs plus one scale),
    identity 32 per coordinate, k-sparse kinds k * (32 + ceil(log2 d))."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if spec.kind in ("sign_scaled", "sign_raw"):
        return d + 32
    if spec.kind == "identity":
        return 32 * d
    index_bits = (d - 1).bit_length()  # ceil(log2 d), 0 for d = 1
    return spec.k * (32 + index_bits)
