"""Activation functions, their derivatives, and squared-derivative moments.

``mu_k`` here is E[phi'(h)^(2k)] with h ~ N(0, q_star), where q_star comes
from the forward variance recursion.  mu_1 is the backward gain factor: a
layer multiplies gradient variance by sigma_w^2 * mu_1, so sigma_w^2 * mu_1 = 1
is the norm-preserving operating point.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .linalg import Rng

__all__ = [
    "ActivationKind",
    "ActivationMoments",
    "apply",
    "derivative",
    "variance_fixed_point",
    "moments",
    "mean_sq_activation",
    "mu_quadrature",
    "tune_sigma_w_sq",
]

# Gauss-Hermite rule (physicists'), reused for all N(0,1) expectations.
_GH_POINTS, _GH_WEIGHTS = np.polynomial.hermite.hermgauss(201)
_GH_Z = _GH_POINTS * math.sqrt(2.0)
_GH_W = _GH_WEIGHTS / math.sqrt(math.pi)


class ActivationKind(enum.Enum):
    LINEAR = "linear"
    RELU = "relu"
    TANH = "tanh"
    HARD_TANH = "hard_tanh"


def apply(kind: ActivationKind, h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if kind is ActivationKind.LINEAR:
        return h.copy()
    if kind is ActivationKind.RELU:
        return np.maximum(h, 0.0)
    if kind is ActivationKind.TANH:
        return np.tanh(h)
    if kind is ActivationKind.HARD_TANH:
        return np.clip(h, -1.0, 1.0)
    raise ValueError(f"unknown activation {kind!r}")


def derivative(kind: ActivationKind, h: np.ndarray) -> np.ndarray:
    # Kink points (0 for ReLU, +-1 for hard-tanh) take derivative 0.
    h = np.asarray(h, dtype=np.float64)
    if kind is ActivationKind.LINEAR:
        return np.ones_like(h)
    if kind is ActivationKind.RELU:
        return (h > 0).astype(np.float64)
    if kind is ActivationKind.TANH:
        t = np.tanh(h)
        return 1.0 - t * t
    if kind is ActivationKind.HARD_TANH:
        return (np.abs(h) < 1.0).astype(np.float64)
    raise ValueError(f"unknown activation {kind!r}")


def mean_sq_activation(kind: ActivationKind, q: float) -> float:
    """E[phi(h)^2] for h ~ N(0, q)."""
    if q < 0:
        raise ValueError("variance q must be non-negative")
    if q == 0:
        return 0.0
    if kind is ActivationKind.LINEAR:
        return q
    if kind is ActivationKind.RELU:
        return q / 2.0
    if kind is ActivationKind.HARD_TANH:
        # E[h^2; |h|<1] + P(|h|>=1), split with a = 1/sqrt(q).
        a = 1.0 / math.sqrt(q)
        inside = math.erf(a / math.sqrt(2.0)) - a * math.sqrt(2.0 / math.pi) * math.exp(-a * a / 2.0)
        return q * inside + (1.0 - math.erf(a / math.sqrt(2.0)))
    if kind is ActivationKind.TANH:
        vals = np.tanh(math.sqrt(q) * _GH_Z)
        return float(np.dot(_GH_W, vals * vals))
    raise ValueError(f"unknown activation {kind!r}")


def _mu_closed_or_quadrature(kind: ActivationKind, q: float, k: int) -> float:
    """E[phi'(h)^(2k)] for h ~ N(0, q); quadrature only for tanh."""
    if kind is ActivationKind.LINEAR:
        return 1.0
    if kind is ActivationKind.RELU:
        return 0.5
    if kind is ActivationKind.HARD_TANH:
        if q == 0:
            return 1.0
        return math.erf(1.0 / math.sqrt(2.0 * q))
    if kind is ActivationKind.TANH:
        if q == 0:
            return 1.0
        t = np.tanh(math.sqrt(q) * _GH_Z)
        d = 1.0 - t * t
        return float(np.dot(_GH_W, d ** (2 * k)))
    raise ValueError(f"unknown activation {kind!r}")


def mu_quadrature(kind: ActivationKind, q_star: float) -> tuple[float, float]:
    """Deterministic (mu_1, mu_2); closed forms where they exist, Gauss-Hermite
    quadrature for tanh.  Used internally for tuning and diagnostics."""
    if q_star < 0:
        raise ValueError("q_star must be non-negative")
    return (
        _mu_closed_or_quadrature(kind, q_star, 1),
        _mu_closed_or_quadrature(kind, q_star, 2),
    )


@dataclass
class ActivationMoments:
    mu1: float
    mu2: float
    q_star: float
    method: str  # "closed_form" or "monte_carlo"
    mc_samples: int = 0
    mu1_stderr: float = 0.0
    mu2_stderr: float = 0.0


def moments(
    kind: ActivationKind,
    q_star: float,
    rng: Rng | None = None,
    mc_samples: int = 1_000_000,
) -> ActivationMoments:
    """Squared-derivative moments mu_1 = E[phi'^2], mu_2 = E[phi'^4] at q_star.

    Linear/ReLU/hard-tanh use closed forms; tanh is estimated by Monte Carlo
    (standard errors reported alongside).
    """
    if q_star < 0:
        raise ValueError("q_star must be non-negative")
    if kind is not ActivationKind.TANH:
        mu1 = _mu_closed_or_quadrature(kind, q_star, 1)
        mu2 = _mu_closed_or_quadrature(kind, q_star, 2)
        return ActivationMoments(mu1, mu2, q_star, "closed_form")
    if mc_samples < 1_000_000:
        raise ValueError("mc_samples must be >= 1e6 for tanh moments")
    if rng is None:
        rng = Rng(0)
    h = rng.normal(size=mc_samples, std=math.sqrt(q_star)) if q_star > 0 else np.zeros(mc_samples)
    d = 1.0 - np.tanh(h) ** 2
    d2 = d * d
    d4 = d2 * d2
    mu1 = float(d2.mean())
    mu2 = float(d4.mean())
    return ActivationMoments(
        mu1,
        mu2,
        q_star,
        "monte_carlo",
        mc_samples,
        float(d2.std(ddof=1) / math.sqrt(mc_samples)),
        float(d4.std(ddof=1) / math.sqrt(mc_samples)),
    )


def variance_fixed_point(
    kind: ActivationKind,
    sigma_w_sq: float,
    sigma_b_sq: float = 0.0,
    sigma_x_sq: float = 0.1,
    tol: float = 1e-9,
    max_iter: int = 10_000,
) -> float:
    """Terminal value of the pre-activation variance recursion
    q_{l+1} = sigma_w^2 E[phi(sqrt(q_l) z)^2] + sigma_b^2, from q_0 = sigma_x^2.
    """
    if sigma_w_sq <= 0:
        raise ValueError("sigma_w_sq must be positive")
    q = float(sigma_x_sq)
    for _ in range(max_iter):
        q_next = sigma_w_sq * mean_sq_activation(kind, q) + sigma_b_sq
        if q_next > 1e12:
            raise FloatingPointError("forward variance recursion is exploding")
        if abs(q_next - q) < tol:
            return q_next
        q = q_next
    return q


def tune_sigma_w_sq(
    kind: ActivationKind,
    sigma_x_sq: float = 0.1,
    sigma_b_sq: float = 0.0,
    tol: float = 1e-10,
    max_iter: int = 500,
) -> tuple[float, float]:
    """Solve sigma_w^2 * mu_1(q_star(sigma_w^2)) = 1 self-consistently.

    Returns (sigma_w_sq, q_star).  Damped fixed-point iteration; mu_1 is
    evaluated by quadrature so the result is deterministic.
    """
    s = 1.0
    q = float(sigma_x_sq)
    for _ in range(max_iter):
        q = variance_fixed_point(kind, s, sigma_b_sq, sigma_x_sq)
        mu1, _ = mu_quadrature(kind, q)
        s_new = 1.0 / mu1
        if abs(s_new - s) < tol:
            return s_new, variance_fixed_point(kind, s_new, sigma_b_sq, sigma_x_sq)
        s = 0.5 * (s + s_new)
    return s, q
