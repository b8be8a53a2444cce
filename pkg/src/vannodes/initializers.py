"""Weight initialization schemes: scaled i.i.d., orthogonal, low-rank
bottleneck, and the Householder product parametrization.

The bottleneck scheme deliberately limits the rank of each weight matrix
(rank <= N_b) while keeping the norm-preserving scale, so a network can start
with fully correlated output nodes without vanishing or exploding gradients.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import Rng, qr_orthogonal, sample_gaussian, sample_uniform

__all__ = [
    "InitKind",
    "InitializerSpec",
    "HouseholderStack",
    "init_scaled",
    "init_orthogonal",
    "init_bottleneck",
    "householder_init",
    "householder_materialize",
    "householder_backward",
    "init_weight",
]


class InitKind(enum.Enum):
    SCALED_GAUSSIAN = "scaled_gaussian"
    SCALED_UNIFORM = "scaled_uniform"
    ORTHOGONAL = "orthogonal"
    BOTTLENECK = "bottleneck"
    HOUSEHOLDER = "householder"


@dataclass
class InitializerSpec:
    kind: InitKind
    sigma_w_sq: float = 1.0  # target gain; entry variance is sigma_w_sq / fan_in
    bottleneck_nb: int = 1
    bottleneck_uniform: bool = False

    def __post_init__(self):
        if self.sigma_w_sq <= 0:
            raise ValueError("sigma_w_sq must be positive")
        if self.bottleneck_nb < 1:
            raise ValueError("bottleneck_nb must be >= 1")


def init_scaled(kind: InitKind, fan_in: int, fan_out: int, sigma_w_sq: float, rng: Rng) -> np.ndarray:
    """i.i.d. entries with variance sigma_w_sq / fan_in (Gaussian or uniform)."""
    if fan_in < 1 or fan_out < 1:
        raise ValueError("dimensions must be >= 1")
    var = sigma_w_sq / fan_in
    if kind is InitKind.SCALED_GAUSSIAN:
        return sample_gaussian(fan_out, fan_in, 0.0, var, rng)
    if kind is InitKind.SCALED_UNIFORM:
        return sample_uniform(fan_out, fan_in, math.sqrt(3.0 * var), rng)
    raise ValueError(f"init_scaled does not handle {kind!r}")


def init_orthogonal(n: int, sigma_w: float, rng: Rng) -> np.ndarray:
    """sigma_w times a Haar-like orthogonal matrix (square layers only)."""
    return sigma_w * qr_orthogonal(n, rng)


def init_bottleneck(
    n_in: int, n_out: int, n_b: int, rng: Rng, uniform: bool = False
) -> np.ndarray:
    """Low-rank product W = V @ U / sqrt(N_b * N_mean) with inner dimension N_b.

    U, V have zero-mean unit-variance entries, N_mean = (N_i + N_o) / 2, so
    N_mean * Var[W] = 1 (the norm-preserving scale) while rank(W) <= N_b.
    """
    if not (1 <= n_b <= min(n_in, n_out)):
        raise ValueError(f"bottleneck dimension {n_b} out of range for {n_in}x{n_out}")
    if uniform:
        u = sample_uniform(n_b, n_in, math.sqrt(3.0), rng)
        v = sample_uniform(n_out, n_b, math.sqrt(3.0), rng)
    else:
        u = sample_gaussian(n_b, n_in, 0.0, 1.0, rng)
        v = sample_gaussian(n_out, n_b, 0.0, 1.0, rng)
    n_mean = (n_in + n_out) / 2.0
    return (v @ u) / math.sqrt(n_b * n_mean)


@dataclass
class HouseholderStack:
    """Square orthogonal matrix represented as a product of n reflections.

    Row i of ``vectors`` is the (unnormalized) reflection vector v_i; the
    materialized matrix is H_n ... H_1 with H_i = I - 2 v v^T / (v^T v).
    Orthogonality holds for any nonzero vectors, so unconstrained gradient
    updates to the rows can never break it.
    """

    vectors: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("vectors must be an n x n array of reflection rows")
        norms = np.linalg.norm(v, axis=1)
        if np.any(norms == 0):
            raise ValueError("reflection vectors must be nonzero")
        self.vectors = v

    @property
    def n(self) -> int:
        return self.vectors.shape[0]


def householder_init(n: int, rng: Rng) -> HouseholderStack:
    if n < 1:
        raise ValueError("n must be >= 1")
    return HouseholderStack(rng.normal(size=(n, n)))


def _reflect_left(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    # H @ M done as a rank-1 update.
    return m - np.outer(v, (2.0 / (v @ v)) * (v @ m))


def _reflect_right(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    # M @ H done as a rank-1 update.
    return m - np.outer((2.0 / (v @ v)) * (m @ v), v)


def householder_materialize(stack: HouseholderStack) -> np.ndarray:
    w = np.eye(stack.n)
    for v in stack.vectors:
        w = _reflect_left(w, v)
    return w


def householder_backward(stack: HouseholderStack, upstream_grad: np.ndarray) -> np.ndarray:
    """Gradients w.r.t. each reflection vector, given dLoss/dW of the
    materialized matrix.  Returns an array shaped like ``stack.vectors``."""
    g = np.asarray(upstream_grad, dtype=np.float64)
    n = stack.n
    if g.shape != (n, n):
        raise ValueError(f"upstream gradient must be {n}x{n}, got {g.shape}")
    # prefix[i] = H_i ... H_1 (prefix[0] = I); suffix[i] = H_n ... H_{i+1}.
    prefix = [np.eye(n)]
    for v in stack.vectors:
        prefix.append(_reflect_left(prefix[-1], v))
    suffix = [None] * (n + 1)
    suffix[n] = np.eye(n)
    for i in range(n - 1, -1, -1):
        suffix[i] = _reflect_right(suffix[i + 1], stack.vectors[i])
    grads = np.empty_like(stack.vectors)
    for i, v in enumerate(stack.vectors):
        gh = suffix[i + 1].T @ g @ prefix[i].T  # dLoss/dH_i
        s = v @ v
        ghv = gh @ v
        ghtv = gh.T @ v
        grads[i] = (-2.0 / s) * (ghv + ghtv) + (4.0 * (v @ ghtv) / (s * s)) * v
    return grads


def init_weight(spec: InitializerSpec, fan_in: int, fan_out: int, rng: Rng):
    """Build one layer's weight from an InitializerSpec.

    Returns either a dense matrix or a HouseholderStack (square layers only).
    Bottleneck and Householder apply to square layers; rectangular layers fall
    back to scaled Gaussian at the spec's sigma_w_sq.
    """
    if spec.kind in (InitKind.SCALED_GAUSSIAN, InitKind.SCALED_UNIFORM):
        return init_scaled(spec.kind, fan_in, fan_out, spec.sigma_w_sq, rng)
    if fan_in != fan_out:
        return init_scaled(InitKind.SCALED_GAUSSIAN, fan_in, fan_out, spec.sigma_w_sq, rng)
    if spec.kind is InitKind.ORTHOGONAL:
        return init_orthogonal(fan_in, math.sqrt(spec.sigma_w_sq), rng)
    if spec.kind is InitKind.BOTTLENECK:
        return init_bottleneck(fan_in, fan_out, spec.bottleneck_nb, rng, spec.bottleneck_uniform)
    if spec.kind is InitKind.HOUSEHOLDER:
        return householder_init(fan_in, rng)
    raise ValueError(f"unknown initializer {spec.kind!r}")
