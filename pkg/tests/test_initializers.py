import numpy as np
import pytest

from vannodes import initializers as ini
from vannodes.initializers import HouseholderStack, InitKind, InitializerSpec
from vannodes.linalg import Rng


def test_scaled_gaussian_variance():
    w = ini.init_scaled(InitKind.SCALED_GAUSSIAN, 400, 400, 1.5, Rng(1))
    assert w.shape == (400, 400)
    assert w.var() == pytest.approx(1.5 / 400, rel=0.02)
    assert abs(w.mean()) < 0.001


def test_scaled_uniform_variance_and_bounds():
    w = ini.init_scaled(InitKind.SCALED_UNIFORM, 400, 400, 1.5, Rng(2))
    half = np.sqrt(3 * 1.5 / 400)
    assert np.abs(w).max() <= half
    assert w.var() == pytest.approx(1.5 / 400, rel=0.02)


def test_orthogonal_init():
    w = ini.init_orthogonal(30, np.sqrt(1.3), Rng(3))
    assert np.allclose(w @ w.T, 1.3 * np.eye(30), atol=1e-10)


def test_bottleneck_rank_and_scale():
    w = ini.init_bottleneck(60, 40, 2, Rng(4))
    assert w.shape == (40, 60)
    s = np.linalg.svd(w, compute_uv=False)
    assert np.sum(s > 1e-10) == 2
    # entries are sums of nb products scaled by 1/sqrt(nb * n_mean):
    # elementwise variance 1/n_mean with n_mean = (60 + 40) / 2
    assert w.var() == pytest.approx(1.0 / 50, rel=0.1)


def test_bottleneck_uniform_factors():
    w = ini.init_bottleneck(400, 400, 1, Rng(5), uniform=True)
    assert np.linalg.matrix_rank(w, tol=1e-10) == 1
    # rank-1 draws have heavy-tailed elementwise variance, hence the slack
    assert w.var() == pytest.approx(1.0 / 400, rel=0.2)


def test_bottleneck_forces_identical_outputs():
    # rank-1 weight: every output node is a scalar multiple of the same
    # projection, so post-activation rows are perfectly correlated (up to sign)
    w = ini.init_bottleneck(50, 50, 1, Rng(6))
    x = Rng(7).normal(size=(200, 50))
    h = x @ w.T
    c = np.corrcoef(h.T)
    assert np.allclose(np.abs(c), 1.0, atol=1e-8)


class TestHouseholder:
    def test_materialized_is_orthogonal(self):
        st = ini.householder_init(12, Rng(8))
        w = ini.householder_materialize(st)
        assert np.allclose(w @ w.T, np.eye(12), atol=1e-10)

    def test_determinant_sign(self):
        # product of n reflections
        for n in (3, 4, 7):
            w = ini.householder_materialize(ini.householder_init(n, Rng(n)))
            assert np.linalg.det(w) == pytest.approx((-1.0) ** n, abs=1e-8)

    def test_scale_invariance(self):
        st = ini.householder_init(6, Rng(9))
        scaled = HouseholderStack(st.vectors * 3.7)
        assert np.allclose(
            ini.householder_materialize(st), ini.householder_materialize(scaled), atol=1e-12
        )

    def test_backward_matches_finite_difference(self):
        n = 5
        st = ini.householder_init(n, Rng(10))
        g_out = Rng(11).normal(size=(n, n))  # dLoss/dW, arbitrary
        grad = ini.householder_backward(st, g_out)
        assert grad.shape == (n, n)
        eps = 1e-6
        for i in range(n):
            for j in range(n):
                vp = st.vectors.copy()
                vm = st.vectors.copy()
                vp[i, j] += eps
                vm[i, j] -= eps
                lp = np.sum(g_out * ini.householder_materialize(HouseholderStack(vp)))
                lm = np.sum(g_out * ini.householder_materialize(HouseholderStack(vm)))
                assert grad[i, j] == pytest.approx((lp - lm) / (2 * eps), abs=1e-5)

    def test_orthogonal_after_updates(self):
        # the parametrization cannot leave the orthogonal group, whatever
        # gradient steps do to the vectors
        st = ini.householder_init(10, Rng(12))
        rng = Rng(13)
        vecs = st.vectors
        for _ in range(100):
            vecs = vecs - 0.05 * rng.normal(size=vecs.shape)
            w = ini.householder_materialize(HouseholderStack(vecs))
            assert np.allclose(w @ w.T, np.eye(10), atol=1e-9)

    def test_zero_vector_rejected(self):
        v = Rng(14).normal(size=(4, 4))
        v[2] = 0.0
        with pytest.raises(ValueError):
            HouseholderStack(v)


class TestDispatch:
    def test_square_kinds(self):
        rng = Rng(15)
        spec = InitializerSpec(InitKind.ORTHOGONAL, 1.0)
        w = ini.init_weight(spec, 20, 20, rng)
        assert np.allclose(w @ w.T, np.eye(20), atol=1e-10)

    def test_householder_returns_stack(self):
        w = ini.init_weight(InitializerSpec(InitKind.HOUSEHOLDER), 20, 20, Rng(16))
        assert isinstance(w, HouseholderStack)

    def test_rectangular_falls_back_to_gaussian(self):
        # orthogonal / bottleneck / reflection kinds only apply to square
        # layers; rectangular layers get the scaled Gaussian at sigma_w_sq
        for kind in (InitKind.ORTHOGONAL, InitKind.BOTTLENECK, InitKind.HOUSEHOLDER):
            w = ini.init_weight(InitializerSpec(kind, 1.0), 300, 200, Rng(17))
            assert isinstance(w, np.ndarray)
            assert w.shape == (200, 300)
            assert w.var() == pytest.approx(1.0 / 300, rel=0.05)

    def test_bad_spec(self):
        with pytest.raises(ValueError):
            InitializerSpec(InitKind.SCALED_GAUSSIAN, -1.0)
        with pytest.raises(ValueError):
            InitializerSpec(InitKind.BOTTLENECK, 1.0, bottleneck_nb=0)
