"""Quality-weighted least-squares reconstruction of the pulse on a truncated basis."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre

RIDGE = 1e-10


class InsufficientSupport(ValueError):
    pass


@dataclass(frozen=True)
class BasisMatrix:
    phi: np.ndarray  # (alpha, n_samples)
    kind: str

    @property
    def alpha(self) -> int:
        return self.phi.shape[0]


@lru_cache(maxsize=32)
def _basis(kind: str, alpha: int, n_samples: int) -> np.ndarray:
    idx = np.arange(n_samples)
    n = np.arange(1, alpha + 1)
    if kind == "fourier":
        t = 2.0 * np.pi * idx / n_samples
        phi = np.where(
            (n % 2 == 1)[:, None],
            np.sin(((n + 1) // 2)[:, None] * t),
            np.cos((n // 2)[:, None] * t),
        )
    elif kind == "legendre":
        u = np.linspace(-1.0, 1.0, n_samples)
        phi = legendre.legvander(u, alpha)[:, 1:].T
    elif kind == "polynomial":
        u = np.linspace(-1.0, 1.0, n_samples)
        phi = u[None, :] ** n[:, None]
    else:
        raise ValueError(f"unknown basis kind {kind!r}")
    phi.setflags(write=False)
    return phi


def build_basis(kind: str, alpha: int, n_samples: int) -> BasisMatrix:
    """Rows 1..alpha of the basis; Fourier rows are sin(k t), cos(k t) with t = 2 pi idx / n."""
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    if alpha >= n_samples:
        raise ValueError("alpha must be smaller than the sample count")
    return BasisMatrix(_basis(kind, alpha, n_samples), kind)


def fit_weighted(pulse, basis: BasisMatrix, quality) -> np.ndarray:
    """Coefficients minimizing ||q * (x - a Phi)||_2 (so q^2 enters the normal equations)."""
    x = np.asarray(getattr(pulse, "samples", pulse), dtype=float)
    q = np.asarray(quality, dtype=float)
    phi = basis.phi
    if not (x.size == phi.shape[1] == q.size):
        raise ValueError("pulse, basis and quality lengths differ")
    if np.count_nonzero(q > 0) < basis.alpha:
        raise InsufficientSupport("insufficient support: fewer positive weights than basis rows")
    weighted = phi * q
    if np.linalg.matrix_rank(weighted) < basis.alpha:
        raise InsufficientSupport("insufficient support: weighted basis is rank deficient")
    gram = weighted @ weighted.T
    gram += RIDGE * np.trace(gram) * np.eye(basis.alpha)
    return np.linalg.solve(gram, weighted @ (q * x))


def reconstruct(coeffs, basis: BasisMatrix) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.size != basis.alpha:
        raise ValueError("coefficient count differs from basis size")
    return coeffs @ basis.phi
