"""Single-component blind source separation by absolute-kurtosis maximization."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import norm, qmc

from .preprocess import TemporalSignalSet

N_QUASI_RESTARTS = 8
MAX_ITER = 200
CONV_TOL = 1e-9
RANK_TOL = 1e-10
TIE_TOL = 1e-12


@dataclass(frozen=True)
class PulseSignal:
    samples: np.ndarray
    fps: float


@dataclass(frozen=True)
class UnmixingVector:
    weights: np.ndarray  # unit norm, over the valid input rows
    rows: np.ndarray  # indices of the input rows the weights apply to
    fallback: bool = False


@dataclass(frozen=True)
class Whitening:
    z: np.ndarray  # (k, n) whitened rows
    matrix: np.ndarray  # (k, m): z = matrix @ x
    rows: np.ndarray


def whiten(sig: TemporalSignalSet, floor: float = RANK_TOL) -> Whitening:
    """Decorrelate the valid rows; directions with eigenvalue < floor * max are dropped."""
    rows = np.flatnonzero(sig.valid)
    if rows.size == 0:
        raise ValueError("no valid signal rows to whiten")
    x = sig.signals[rows]
    n = x.shape[1]
    cov = x @ x.T / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    if evals[0] <= 0:
        raise ValueError("signal rows have zero energy")
    keep = evals >= floor * evals[0]
    W = evecs[:, keep].T / np.sqrt(evals[keep])[:, None]
    return Whitening(W @ x, W, rows)


def kurtosis(x) -> float:
    """Excess kurtosis m4/m2^2 - 3 from central moments."""
    x = np.asarray(x, dtype=float)
    if x.size < 4:
        raise ValueError("kurtosis needs at least 4 samples")
    d = x - x.mean()
    m2 = np.mean(d * d)
    if m2 <= 0:
        raise ValueError("kurtosis undefined for zero variance")
    return float(np.mean(d**4) / m2**2 - 3.0)


@lru_cache(maxsize=32)
def _quasi_random_starts(dim: int) -> np.ndarray:
    u = qmc.Halton(d=dim, scramble=False).random(N_QUASI_RESTARTS + 1)[1:]
    v = norm.ppf(u)
    nrm = np.linalg.norm(v, axis=1, keepdims=True)
    # the 1-D sequence hits u = 0.5, i.e. the zero vector
    v = np.where(nrm > 1e-12, v / np.where(nrm > 1e-12, nrm, 1.0), np.eye(dim)[0])
    return v


def restart_vectors(dim: int) -> np.ndarray:
    """Fixed quasi-random unit vectors followed by the coordinate axes."""
    return np.vstack([_quasi_random_starts(dim), np.eye(dim)])


def _fixed_point(z: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, float]:
    """Kurtosis fixed-point iteration; returns the best iterate visited."""
    best_w, best_k = w, abs(kurtosis(w @ z))
    for _ in range(MAX_ITER):
        y = w @ z
        w_new = (z * y**3).mean(axis=1) - 3.0 * w
        norm_ = np.linalg.norm(w_new)
        if not np.isfinite(norm_) or norm_ == 0:
            break
        w_new /= norm_
        k = abs(kurtosis(w_new @ z))
        if k > best_k:
            best_w, best_k = w_new, k
        converged = abs(w_new @ w) > 1.0 - CONV_TOL
        w = w_new
        if converged:
            break
    return best_w, best_k


def extract_pulse(sig: TemporalSignalSet, floor: float = RANK_TOL) -> tuple[PulseSignal, UnmixingVector]:
    """One component maximizing |excess kurtosis| over unit directions in whitened space."""
    wh = whiten(sig, floor)
    z = wh.z
    dim = z.shape[0]
    best = None
    for idx, w0 in enumerate(restart_vectors(dim)):
        w, k = _fixed_point(z, w0)
        if best is None or k > best[1] + TIE_TOL:
            best = (w, k)
    w, k = best
    fallback = not (np.isfinite(k) and k > TIE_TOL)
    if fallback:
        w = np.eye(dim)[0]  # leading principal direction
    y = w @ z
    if y[np.argmax(np.abs(y))] < 0:
        w, y = -w, -y
    b = w @ wh.matrix
    b = b / np.linalg.norm(b)
    return PulseSignal(y, sig.fps), UnmixingVector(b, wh.rows, fallback)
