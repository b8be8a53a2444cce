"""Dense linear algebra helpers and deterministic random streams.

Matrices and vectors are plain float64 numpy arrays.  The eigensolver and QR
are delegated to LAPACK (via numpy); the contracts here add the shape and
symmetry checks the rest of the package relies on.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Rng",
    "matmul",
    "sym_eigenvalues",
    "qr_orthogonal",
    "sample_gaussian",
    "sample_uniform",
]


class Rng:
    """Deterministic random stream backed by the counter-based Philox generator.

    Identical ``(seed, key)`` pairs produce identical sample streams on every
    platform.  ``spawn(i)`` derives an independent child stream, so concurrent
    runs keyed by run index never interact.
    """

    def __init__(self, seed: int, key: tuple[int, ...] = ()):
        if seed < 0:
            raise ValueError("seed must be a non-negative integer")
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        self._gen = np.random.Generator(
            np.random.Philox(np.random.SeedSequence([self.seed, *self.key]))
        )

    def spawn(self, index: int) -> "Rng":
        return Rng(self.seed, self.key + (int(index),))

    def normal(self, size=None, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
        return self._gen.normal(loc=mean, scale=std, size=size)

    def uniform(self, size=None, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        return self._gen.uniform(low=low, high=high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def integers(self, low: int, high: int, size=None) -> np.ndarray:
        return self._gen.integers(low, high, size=size)


def _as_matrix(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {a.shape}")
    return a


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit dimension check."""
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} x {b.shape}")
    return a @ b


def sym_eigenvalues(a: np.ndarray, return_vectors: bool = False):
    """Eigenvalues of a symmetric matrix, sorted descending.

    With ``return_vectors=True`` also returns the matching eigenvector columns,
    so ``Q @ diag(w) @ Q.T`` reconstructs the input.
    """
    a = _as_matrix(a, "a")
    n, m = a.shape
    if n != m:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max()))
    if np.abs(a - a.T).max() > 1e-10 * scale:
        raise ValueError("matrix is not symmetric within tolerance 1e-10")
    if return_vectors:
        w, q = np.linalg.eigh(a)
        order = np.argsort(-w, kind="stable")
        return w[order], q[:, order]
    w = np.linalg.eigvalsh(a)
    return w[::-1].copy()


def qr_orthogonal(n: int, rng: Rng) -> np.ndarray:
    """Haar-like random orthogonal matrix: QR of a Gaussian draw with the
    R diagonal signs folded into Q."""
    if n < 1:
        raise ValueError("n must be >= 1")
    g = rng.normal(size=(n, n))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def sample_gaussian(rows: int, cols: int, mean: float, variance: float, rng: Rng) -> np.ndarray:
    if variance < 0:
        raise ValueError("variance must be non-negative")
    if variance == 0:
        return np.full((rows, cols), float(mean))
    return rng.normal(size=(rows, cols), mean=mean, std=np.sqrt(variance))


def sample_uniform(rows: int, cols: int, half_width: float, rng: Rng) -> np.ndarray:
    if half_width < 0:
        raise ValueError("half_width must be non-negative")
    return rng.uniform(size=(rows, cols), low=-half_width, high=half_width)
