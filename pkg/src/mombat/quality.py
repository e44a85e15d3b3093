"""Per-frame confidence from out-of-plane landmark motion, and spectral PSNR."""

from __future__ import annotations

import numpy as np

from .ingest import LandmarkTrack
from .spectral import Spectrum

EPS_REL = 1e-12
GAMMA_CAP = 1e6


def out_of_plane_deviations(track: LandmarkTrack) -> np.ndarray:
    """Largest absolute z change over boundary landmarks between consecutive frames."""
    z = track.group_array("boundary")[:, :, 2]
    if z.shape[1] == 0:
        raise ValueError("no boundary landmarks")
    return np.abs(np.diff(z, axis=0)).max(axis=1)


def quality_from_deviations(d) -> np.ndarray:
    """Min-max normalized deviations flipped so low motion means quality 1."""
    d = np.asarray(d, dtype=float)
    if d.size == 0:
        raise ValueError("empty deviation series")
    span = d.max() - d.min()
    if span <= 0:
        return np.ones_like(d)
    return np.clip(1.0 - (d - d.min()) / span, 0.0, 1.0)


def psnr(spec: Spectrum, n_p: int = 2) -> float:
    """Peak neighbourhood magnitude over the remaining in-band magnitude."""
    s = np.asarray(spec.mags, dtype=float)
    total = s.sum()
    if s.size == 0 or total <= 0:
        raise ValueError("PSNR undefined for an all-zero spectrum")
    peak = int(np.argmax(s))
    lo, hi = max(0, peak - n_p), min(s.size, peak + n_p + 1)
    num = s[lo:hi].sum()
    den = max(total - num, EPS_REL * total)
    return float(min(num / den, GAMMA_CAP))
