"""Sequential MAP heart-rate tracking with a Gaussian-plus-uniform prior."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import Spectrum, round_half_away


@dataclass(frozen=True)
class PriorState:
    h: float = 0.0  # Hz
    gamma: float = 0.0
    initialized: bool = False


@dataclass(frozen=True)
class HrEstimate:
    window_index: int
    freq: float
    hr: int
    posterior_peak: float = float("nan")
    flag: str = ""


def gaussian_prior(theta, h: float, c: float, gamma: float) -> np.ndarray:
    """Normal density with mean h and variance c/gamma."""
    theta = np.asarray(theta, dtype=float)
    var = c / gamma
    return np.sqrt(gamma / (2.0 * np.pi * c)) * np.exp(-0.5 * (theta - h) ** 2 / var)


def _prior_terms(state: PriorState, grid, c: float, c_hat: float) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if state.initialized and state.gamma > 0:
        g = gaussian_prior(grid, state.h, c, state.gamma)
    else:
        g = np.zeros_like(grid)
    return c_hat + g


def prior_density(state: PriorState, grid, c: float = 4.0, c_hat: float = 0.4) -> np.ndarray:
    p = _prior_terms(state, grid, c, c_hat)
    total = p.sum()
    if total <= 0:
        # c_hat = 0 with no usable Gaussian: nothing to prefer
        return np.full(p.shape, 1.0 / p.size)
    return p / total


def likelihood(spec: Spectrum) -> np.ndarray:
    s = np.asarray(spec.mags, dtype=float)
    total = s.sum()
    if total <= 0:
        raise ValueError("likelihood undefined for an all-zero spectrum")
    return s / total


def map_estimate(spec: Spectrum, state: PriorState, c: float = 4.0, c_hat: float = 0.4,
                 window_index: int = 0) -> HrEstimate:
    lik = likelihood(spec)
    post = lik * _prior_terms(state, spec.freqs, c, c_hat)
    z = post.sum()
    if z <= 0 or not np.isfinite(z):
        post = lik
        z = 1.0
    post = post / z
    j = int(np.argmax(post))
    f = float(spec.freqs[j])
    return HrEstimate(window_index, f, round_half_away(f * 60.0), float(post[j]))


def track_sequence(spectra, gammas, c: float = 4.0, c_hat: float = 0.4) -> list[HrEstimate]:
    """Left fold over windows; the prior follows the previous estimate and its PSNR.

    ``None`` (or an all-zero spectrum) marks a failed window: it reports the
    prior mean, flagged, and leaves the state untouched.
    """
    if len(spectra) != len(gammas):
        raise ValueError("spectra and gammas differ in length")
    state = PriorState()
    out = []
    for i, (spec, gamma) in enumerate(zip(spectra, gammas)):
        if spec is None or not np.any(np.asarray(spec.mags) > 0):
            f = state.h if state.initialized else math.nan
            hr = round_half_away(f * 60.0) if state.initialized else 0
            out.append(HrEstimate(i, f, hr, math.nan, "failed"))
            continue
        est = map_estimate(spec, state, c, c_hat, window_index=i)
        out.append(est)
        g = float(gamma) if gamma is not None and np.isfinite(gamma) else 0.0
        state = PriorState(est.freq, g, True)
    return out
