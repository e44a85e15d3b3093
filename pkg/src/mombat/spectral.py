"""Band-limited magnitude spectra on a uniform bpm grid."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Spectrum:
    freqs: np.ndarray  # Hz, uniform grid inside [band_lo, band_hi]
    mags: np.ndarray
    window: int = -1


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def hr_grid(band_lo: float, band_hi: float, grid_bpm: float) -> np.ndarray:
    step = grid_bpm / 60.0
    n = int(math.floor((band_hi - band_lo) / step + 1e-9)) + 1
    return band_lo + step * np.arange(n)


def compute_spectrum(x, fps: float, band_lo: float = 0.7, band_hi: float = 4.0,
                     grid_bpm: float = 1.0, window: int = -1) -> Spectrum:
    """|DFT| of the zero-padded series, sampled at the nearest native bin of each grid point."""
    x = np.asarray(x, dtype=float)
    if x.size < 8:
        raise ValueError("spectrum needs at least 8 samples")
    if band_lo >= fps / 2:
        raise ValueError("band empty under this frame rate")
    grid = hr_grid(band_lo, min(band_hi, fps / 2), grid_bpm)
    n_fft = max(x.size, int(math.ceil(fps * 60.0 / grid_bpm - 1e-9)))
    mags = np.abs(np.fft.rfft(x, n=n_fft))
    bins = np.rint(grid * n_fft / fps).astype(int)
    return Spectrum(grid, mags[bins], window)


def peak_hr(spec: Spectrum) -> tuple[float, int]:
    """Argmax frequency (lowest on ties) and its rounded bpm."""
    if spec.mags.size == 0:
        raise ValueError("empty spectrum")
    if not np.any(spec.mags > 0):
        raise ValueError("no peak: all-zero spectrum")
    f = float(spec.freqs[int(np.argmax(spec.mags))])
    return f, round_half_away(f * 60.0)
