"""Vanishing-node metrics: the node-correlation indicator computed four ways,
epsilon-effective node counts, and gradient-scale diagnostics.

The indicator (here ``vni``) is the weighted average of squared correlation
coefficients between output-layer nodes, weights sigma_i^2 sigma_j^2.  It
ranges from 1/N (independent nodes) to 1 (full collapse).  The covariance
form tr(C C^T)/tr(C)^2 is an exact identity with the correlation form; the
Jacobian and moment forms are the random-matrix approximations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import activations as act
from .activations import ActivationKind, ActivationMoments
from .initializers import InitKind
from .linalg import sym_eigenvalues
from .network import NetworkSpec, NetworkState, backward, forward, jacobian

__all__ = [
    "VniReport",
    "SpectralMoments",
    "GradientDiagnostics",
    "vni_empirical",
    "vni_from_covariance",
    "vni_from_jacobian",
    "vni_theoretical",
    "s1_for_ensemble",
    "epsilon_enn",
    "enn_from_rsq",
    "gradient_diagnostics",
    "walking_dead_ratio",
    "correlation_heatmap",
    "vni_report",
    "DEFAULT_ENN_EPSILONS",
]

DEFAULT_ENN_EPSILONS = (0.01, 0.1, 0.5, 0.9)


@dataclass
class SpectralMoments:
    m1: float
    m2: float
    eigenvalues: np.ndarray = field(repr=False)
    s1: float | None = None


@dataclass
class VniReport:
    vni_empirical: float
    vni_covariance: float
    vni_jacobian: float | None
    vni_theoretical: float | None
    vni_theoretical_raw: float | None
    corr_sq: np.ndarray = field(repr=False)
    node_variances: np.ndarray = field(repr=False)
    enn: dict = field(default_factory=dict)


@dataclass
class GradientDiagnostics:
    per_layer_gain: np.ndarray  # fan_in * Var[W_l] * mu_1 per backbone layer
    var_x_L: float
    var_input_grad: float
    var_weight_grad: np.ndarray
    sigma_x_sq: float
    sigma_y_sq: float
    predicted_var_x_L: float
    predicted_var_input_grad: float
    predicted_var_weight_grad: float


def _corr_stats(activations: np.ndarray):
    a = np.asarray(activations, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 2:
        raise ValueError("need a (batch >= 2) x N activation matrix")
    centered = a - a.mean(axis=0)
    cov = (centered.T @ centered) / (a.shape[0] - 1)
    var = np.diag(cov).copy()
    if np.all(var == 0):
        raise ValueError("all nodes are constant: correlations undefined")
    return cov, var


def vni_empirical(activations: np.ndarray):
    """Indicator from sample statistics of an activation batch.

    Returns ``(value, corr_sq, node_variances)``.  Constant nodes contribute
    zero weight; their corr_sq entries are reported as 0.
    """
    cov, var = _corr_stats(activations)
    live = var > 0
    corr_sq = np.zeros_like(cov)
    denom = np.sqrt(np.outer(var[live], var[live]))
    corr_sq[np.ix_(live, live)] = np.clip((cov[np.ix_(live, live)] / denom) ** 2, 0.0, 1.0)
    weights = np.outer(var, var)
    value = float(np.sum(corr_sq * weights) / np.sum(weights))
    return value, corr_sq, var


def vni_from_covariance(c: np.ndarray) -> float:
    """tr(C C^T) / tr(C)^2 for a symmetric PSD covariance matrix."""
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError("covariance must be square")
    scale = max(1.0, float(np.abs(c).max()))
    if np.abs(c - c.T).max() > 1e-8 * scale:
        raise ValueError("covariance must be symmetric")
    trace = float(np.trace(c))
    if trace == 0:
        raise ValueError("covariance has zero trace")
    return float(np.sum(c * c) / trace**2)


def vni_from_jacobian(j: np.ndarray, sigma_x_sq: float = 1.0):
    """Moment form m_2 / (N m_1^2) from the spectrum of J J^T.

    sigma_x_sq cancels in the ratio; it is accepted for interface symmetry
    with the covariance C = sigma_x^2 J J^T.
    """
    j = np.asarray(j, dtype=np.float64)
    jjt = j @ j.T
    lam = sym_eigenvalues(jjt)
    n = jjt.shape[0]
    m1 = float(lam.mean())
    m2 = float((lam**2).mean())
    if m1 == 0:
        raise ValueError("fully degenerate Jacobian: m_1 = 0")
    return m2 / (n * m1 * m1), SpectralMoments(m1, m2, lam)


def vni_theoretical(depth: int, width: int, moments: ActivationMoments, s1: float):
    """Moment-based prediction 1/N + (L/N)(mu_2/mu_1^2 - 1 - s_1).

    Returns ``(clamped, raw)``; the raw value can leave [1/N, 1] when the
    width does not dominate the depth.
    """
    if depth < 1 or width < 1:
        raise ValueError("depth and width must be >= 1")
    if moments.mu1 <= 0:
        raise ValueError("mu_1 must be positive")
    raw = 1.0 / width + (depth / width) * (moments.mu2 / moments.mu1**2 - 1.0 - s1)
    return min(max(raw, 1.0 / width), 1.0), raw


def s1_for_ensemble(kind: InitKind) -> float:
    """First S-transform series moment of the weight ensemble: -1 for i.i.d.
    Gaussian/uniform entries, 0 for orthogonal matrices."""
    if kind in (InitKind.SCALED_GAUSSIAN, InitKind.SCALED_UNIFORM):
        return -1.0
    if kind in (InitKind.ORTHOGONAL, InitKind.HOUSEHOLDER):
        # any product of reflections is orthogonal, so the same series applies
        return 0.0
    raise ValueError(f"no closed-form s_1 for ensemble {kind!r}")


def epsilon_enn(c: np.ndarray, epsilon: float) -> int:
    """Count of covariance eigenvalues >= epsilon * lambda_max."""
    if not (0 < epsilon <= 1):
        raise ValueError("epsilon must be in (0, 1]")
    lam = sym_eigenvalues(np.asarray(c, dtype=np.float64))
    lam1 = lam[0]
    if lam1 <= 0:
        raise ValueError("covariance has no positive eigenvalue")
    return int(np.sum(lam >= epsilon * lam1 - 1e-9 * lam1))


def enn_from_rsq(width: int, r_sq: float, epsilon: float) -> float:
    """Effective node count from the indicator value via the extremal-spectrum
    quadratic [1 + (N_e - 1) eps]^2 = (1 + (N_e - 1) eps^2) / R."""
    if not (0 < epsilon <= 1):
        raise ValueError("epsilon must be in (0, 1]")
    if not (1.0 / width - 1e-9 <= r_sq <= 1.0 + 1e-9):
        raise ValueError(f"r_sq must be within [1/{width}, 1]")
    # R eps^2 t^2 + eps(2R - eps) t + (R - 1) = 0 with t = N_e - 1; the root
    # product is <= 0, so exactly one root is non-negative.
    a = r_sq * epsilon * epsilon
    b = epsilon * (2.0 * r_sq - epsilon)
    c = r_sq - 1.0
    disc = b * b - 4.0 * a * c
    if disc < 0:
        raise ValueError("no real solution for the effective node count")
    t = (-b + math.sqrt(disc)) / (2.0 * a)
    # the extremal two-level spectrum is not constrained to N nodes, so the
    # root can slightly exceed N - 1 near the 1/N floor; clamp to the
    # physically meaningful range
    return min(max(t + 1.0, 1.0), float(width))


def walking_dead_ratio(grads_a: np.ndarray, grads_b: np.ndarray) -> float:
    """log10 of the squared-norm ratio of two back-propagated gradients."""
    na = float(np.sum(np.square(grads_a)))
    nb = float(np.sum(np.square(grads_b)))
    if na == 0 or nb == 0:
        raise ValueError("gradient norm is zero: gradient has truly vanished")
    return math.log10(na / nb)


def correlation_heatmap(corr_sq: np.ndarray):
    """Node ordering that clusters correlated nodes: sort by the leading
    eigenvector of corr_sq (ties broken by index).  Returns the permuted
    matrix and the permutation."""
    c = np.asarray(corr_sq, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError("corr_sq must be square")
    _, vecs = sym_eigenvalues(0.5 * (c + c.T), return_vectors=True)
    lead = vecs[:, 0]
    if lead[np.argmax(np.abs(lead))] < 0:
        lead = -lead
    perm = np.argsort(-lead, kind="stable")
    return c[np.ix_(perm, perm)], perm


def gradient_diagnostics(
    state: NetworkState,
    probe_batch: np.ndarray,
    loss_grads: np.ndarray,
    mu1: float | None = None,
) -> GradientDiagnostics:
    """Empirical forward/backward variance scales vs the mean-field
    predictions sigma_x^2 (sigma_w^2 mu_1)^L etc.

    ``loss_grads`` is dLoss/dx_L (readout excluded), one row per probe sample.
    ``mu1`` defaults to the quadrature value at the measured input variance.
    """
    probe = np.asarray(probe_batch, dtype=np.float64)
    if probe.size == 0:
        raise ValueError("probe batch must be nonempty")
    spec = state.spec
    sigma_x_sq = float(probe.var())
    if mu1 is None:
        q_star = act.variance_fixed_point(
            spec.activation, 1.0, 0.0, sigma_x_sq if sigma_x_sq > 0 else 1.0
        )
        mu1 = act.mu_quadrature(spec.activation, q_star)[0]
    headless = _headless(state)
    trace = forward(headless, probe)
    grads = backward(headless, trace, np.asarray(loss_grads, dtype=np.float64))
    x_l = trace.post[-1]
    var_x_l = float(((x_l - x_l.mean(axis=0)) ** 2).mean())
    var_in = float(grads.input_gradient.var())
    sigma_y_sq = float(np.asarray(loss_grads).var())
    gains = np.array([spec.fan_in(l) * float(w.var()) * mu1 for l, w in enumerate(state.weights)])
    var_w = np.array([float(g.var()) for g in grads.weights])
    gain = float(np.median(gains)) if gains.size else 1.0
    return GradientDiagnostics(
        per_layer_gain=gains,
        var_x_L=var_x_l,
        var_input_grad=var_in,
        var_weight_grad=var_w,
        sigma_x_sq=sigma_x_sq,
        sigma_y_sq=sigma_y_sq,
        predicted_var_x_L=sigma_x_sq * gain**spec.depth_L,
        predicted_var_input_grad=sigma_y_sq * gain**spec.depth_L,
        predicted_var_weight_grad=sigma_x_sq * sigma_y_sq * gain ** (spec.depth_L - 1),
    )


def _headless(state: NetworkState) -> NetworkState:
    """View of a network without the readout head; node statistics are taken
    at backbone layer L."""
    spec = state.spec
    if spec.num_classes == 0:
        return state
    return NetworkState(
        spec=NetworkSpec(spec.depth_L, spec.width_N, spec.input_dim, 0, spec.activation),
        weights=state.weights,
        biases=state.biases,
        parametrization=state.parametrization,
        stacks=state.stacks,
    )


def vni_report(
    state: NetworkState,
    probe_batch: np.ndarray,
    moments: ActivationMoments | None = None,
    s1: float | None = None,
    enn_epsilons=DEFAULT_ENN_EPSILONS,
    with_jacobian: bool = False,
) -> VniReport:
    """All indicator routes on one probe batch, plus effective node counts."""
    headless = _headless(state)
    trace = forward(headless, probe_batch)
    acts = trace.post[-1]
    value, corr_sq, var = vni_empirical(acts)
    centered = acts - acts.mean(axis=0)
    cov = (centered.T @ centered) / (acts.shape[0] - 1)
    cov_value = vni_from_covariance(cov)
    jac_value = None
    if with_jacobian:
        j = jacobian(headless, np.asarray(probe_batch)[0])
        jac_value, _ = vni_from_jacobian(j)
    theo = theo_raw = None
    if moments is not None and s1 is not None:
        theo, theo_raw = vni_theoretical(state.spec.depth_L, state.spec.width_N, moments, s1)
    enn = {eps: epsilon_enn(cov, eps) for eps in enn_epsilons}
    return VniReport(value, cov_value, jac_value, theo, theo_raw, corr_sq, var, enn)
