import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vannodes import activations as act
from vannodes.activations import ActivationKind
from vannodes.linalg import Rng

KINDS = list(ActivationKind)
SMOOTH_POINTS = np.array([-2.3, -0.7, -0.2, 0.4, 1.1, 3.0])  # away from kinks


def test_apply_values():
    h = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
    assert np.array_equal(act.apply(ActivationKind.LINEAR, h), h)
    assert np.array_equal(act.apply(ActivationKind.RELU, h), [0.0, 0.0, 0.0, 0.5, 2.0])
    assert np.array_equal(act.apply(ActivationKind.HARD_TANH, h), [-1.0, -0.5, 0.0, 0.5, 1.0])
    assert np.allclose(act.apply(ActivationKind.TANH, h), np.tanh(h))


@pytest.mark.parametrize("kind", KINDS)
def test_derivative_matches_finite_difference(kind):
    eps = 1e-6
    fd = (act.apply(kind, SMOOTH_POINTS + eps) - act.apply(kind, SMOOTH_POINTS - eps)) / (2 * eps)
    assert np.allclose(act.derivative(kind, SMOOTH_POINTS), fd, atol=1e-6)


def test_derivative_at_kinks_is_zero():
    # saturation boundary convention: treat the kink as saturated
    assert act.derivative(ActivationKind.RELU, np.array([0.0]))[0] == 0.0
    assert act.derivative(ActivationKind.HARD_TANH, np.array([1.0, -1.0])).tolist() == [0.0, 0.0]


@pytest.mark.parametrize("kind,q", [(k, q) for k in KINDS for q in (0.1, 1.0, 4.0)])
def test_mean_sq_activation_against_monte_carlo(kind, q):
    z = Rng(31, (kind.value == "tanh",)).normal(size=2_000_000)
    mc = float(np.mean(act.apply(kind, math.sqrt(q) * z) ** 2))
    assert act.mean_sq_activation(kind, q) == pytest.approx(mc, rel=5e-3)


def test_mu_closed_forms():
    for q in (0.2, 1.0, 7.0):
        assert act.mu_quadrature(ActivationKind.LINEAR, q) == (1.0, 1.0)
        assert act.mu_quadrature(ActivationKind.RELU, q) == (0.5, 0.5)
        mu1, mu2 = act.mu_quadrature(ActivationKind.HARD_TANH, q)
        want = math.erf(1.0 / math.sqrt(2 * q))
        assert mu1 == pytest.approx(want, abs=1e-12)
        assert mu2 == pytest.approx(want, abs=1e-12)


def test_tanh_quadrature_against_monte_carlo():
    q = 1.3
    mu1, mu2 = act.mu_quadrature(ActivationKind.TANH, q)
    z = Rng(77).normal(size=4_000_000)
    d = 1.0 / np.cosh(math.sqrt(q) * z) ** 2
    assert mu1 == pytest.approx(float(np.mean(d**2)), rel=2e-3)
    assert mu2 == pytest.approx(float(np.mean(d**4)), rel=2e-3)


def test_moments_monte_carlo_path():
    m = act.moments(ActivationKind.TANH, 0.8, rng=Rng(5))
    assert m.method == "monte_carlo"
    assert m.mc_samples >= 1_000_000
    g1, g2 = act.mu_quadrature(ActivationKind.TANH, 0.8)
    assert m.mu1 == pytest.approx(g1, abs=4 * m.mu1_stderr)
    assert m.mu2 == pytest.approx(g2, abs=4 * m.mu2_stderr)
    with pytest.raises(ValueError):
        act.moments(ActivationKind.TANH, 0.8, rng=Rng(5), mc_samples=10_000)


def test_moments_closed_form_path():
    m = act.moments(ActivationKind.RELU, 2.0)
    assert m.method == "closed_form"
    assert (m.mu1, m.mu2) == (0.5, 0.5)


@given(st.sampled_from(KINDS), st.floats(0.01, 10.0))
@settings(max_examples=60, deadline=None)
def test_mu2_le_mu1_le_one_for_bounded_slope(kind, q):
    mu1, mu2 = act.mu_quadrature(kind, q)
    # phi' in [0, 1] for all four kinds, so mu_2 <= mu_1 <= 1
    assert 0.0 <= mu2 <= mu1 + 1e-12
    assert mu1 <= 1.0 + 1e-12


class TestVarianceFixedPoint:
    def test_linear_closed_form(self):
        # q_{t+1} = sw2 * q_t + sb2  ->  q* = sb2 / (1 - sw2)
        q = act.variance_fixed_point(ActivationKind.LINEAR, 0.5, 0.3, 1.0)
        assert q == pytest.approx(0.3 / 0.5, abs=1e-8)

    def test_is_a_fixed_point(self):
        for kind in (ActivationKind.TANH, ActivationKind.HARD_TANH):
            q = act.variance_fixed_point(kind, 1.4, 0.05, 0.2)
            nxt = 1.4 * act.mean_sq_activation(kind, q) + 0.05
            assert nxt == pytest.approx(q, abs=1e-7)

    def test_divergence_raises(self):
        with pytest.raises(FloatingPointError):
            act.variance_fixed_point(ActivationKind.LINEAR, 2.0, 1.0, 1.0)

    def test_empirical_forward_variance(self):
        # push a wide batch through one layer and compare variances
        kind = ActivationKind.TANH
        sw2, sb2, q0 = 1.5, 0.1, 0.7
        rng = Rng(41)
        h = rng.normal(size=500_000, std=math.sqrt(q0))
        w_scale = math.sqrt(sw2)
        # E[ sw2 * phi(h)^2 ] + sb2 is the one-step map
        got = w_scale**2 * float(np.mean(act.apply(kind, h) ** 2)) + sb2
        want = sw2 * act.mean_sq_activation(kind, q0) + sb2
        assert got == pytest.approx(want, rel=5e-3)


class TestTune:
    def test_relu_norm_preserving(self):
        sw2, _ = act.tune_sigma_w_sq(ActivationKind.RELU, 1.0)
        assert sw2 == pytest.approx(2.0, abs=1e-6)

    def test_linear(self):
        sw2, q = act.tune_sigma_w_sq(ActivationKind.LINEAR, 0.5)
        assert sw2 == pytest.approx(1.0, abs=1e-6)
        assert q == pytest.approx(0.5, rel=1e-4)

    @pytest.mark.parametrize("kind", [ActivationKind.HARD_TANH, ActivationKind.TANH])
    def test_norm_preserving_condition(self, kind):
        sw2, q = act.tune_sigma_w_sq(kind, 0.1)
        mu1, _ = act.mu_quadrature(kind, q)
        assert sw2 * mu1 == pytest.approx(1.0, abs=1e-5)
