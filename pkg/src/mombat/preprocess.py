"""In-plane registration, ROI grid layout, temporal signal extraction and filtering."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import signal as sps
from scipy import sparse
from scipy.linalg import solveh_banded

from .ingest import FrameImage, RoiTraceFile

N_BLOCKS_X = 10
BANDPASS_ORDER = 3


@dataclass(frozen=True)
class RigidTransform2D:
    """p -> R(theta) p + t."""

    theta: float = 0.0
    tx: float = 0.0
    ty: float = 0.0

    def __post_init__(self):
        # wrap into (-pi, pi]
        th = math.atan2(math.sin(self.theta), math.cos(self.theta))
        if th == -math.pi:
            th = math.pi
        object.__setattr__(self, "theta", th)

    @property
    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, -s, self.tx], [s, c, self.ty], [0.0, 0.0, 1.0]])

    def apply(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        c, s = math.cos(self.theta), math.sin(self.theta)
        x, y = pts[..., 0], pts[..., 1]
        return np.stack([c * x - s * y + self.tx, s * x + c * y + self.ty], axis=-1)

    def inverse(self) -> RigidTransform2D:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return RigidTransform2D(-self.theta, -(c * self.tx + s * self.ty), s * self.tx - c * self.ty)

    def compose(self, other: RigidTransform2D) -> RigidTransform2D:
        """self after other: x -> self(other(x))."""
        tx, ty = self.apply([other.tx, other.ty])
        return RigidTransform2D(self.theta + other.theta, float(tx), float(ty))

    @classmethod
    def identity(cls) -> RigidTransform2D:
        return cls()


@dataclass(frozen=True)
class RoiGrid:
    blocks: tuple[tuple[int, int], ...]  # (x0, y0) of each square block
    side: int

    def block_coords(self, i: int) -> np.ndarray:
        """Pixel-center coordinates (side*side, 2) of block ``i`` as (x, y)."""
        x0, y0 = self.blocks[i]
        ys, xs = np.mgrid[y0 : y0 + self.side, x0 : x0 + self.side]
        return np.stack([xs.ravel(), ys.ravel()], axis=-1).astype(float)


@dataclass(frozen=True)
class WarpedGrid:
    """Per-block nearest-pixel sample locations in one (current) frame."""

    grid: RoiGrid
    xs: list[np.ndarray]
    ys: list[np.ndarray]
    inside: list[np.ndarray]  # bool per sample
    valid: np.ndarray  # bool per block; False when fully out of frame


@dataclass
class TemporalSignalSet:
    fps: float
    signals: np.ndarray  # (rois, samples)
    channel: str = "green"
    valid: np.ndarray = field(default=None)

    def __post_init__(self):
        self.signals = np.atleast_2d(np.asarray(self.signals, dtype=float))
        if self.valid is None:
            self.valid = np.ones(self.signals.shape[0], dtype=bool)
        self.valid = np.asarray(self.valid, dtype=bool)

    @property
    def n_samples(self) -> int:
        return self.signals.shape[1]

    def window(self, start: int, stop: int) -> TemporalSignalSet:
        return TemporalSignalSet(self.fps, self.signals[:, start:stop], self.channel, self.valid.copy())


# -- registration ------------------------------------------------------------


def estimate_rigid_transform(prev_nose, cur_nose) -> RigidTransform2D:
    """Least-squares rigid transform T with T(prev) ~ cur (closed-form 2-D Procrustes)."""
    P = np.asarray(prev_nose, dtype=float)[:, :2]
    C = np.asarray(cur_nose, dtype=float)[:, :2]
    if P.shape != C.shape:
        raise ValueError("point lists differ in length")
    if P.shape[0] < 2:
        raise ValueError("need at least 2 points to estimate a rigid transform")
    mp, mc = P.mean(axis=0), C.mean(axis=0)
    p, c = P - mp, C - mc
    if np.allclose(p, 0.0) or np.allclose(c, 0.0):
        raise ValueError("all points coincident; rotation unobservable")
    # maximize sum <R p_i, c_i>; optimum angle from the cross-covariance
    s_dot = np.sum(p[:, 0] * c[:, 0] + p[:, 1] * c[:, 1])
    s_cross = np.sum(p[:, 0] * c[:, 1] - p[:, 1] * c[:, 0])
    theta = math.atan2(s_cross, s_dot)
    rot = RigidTransform2D(theta)
    tx, ty = mc - rot.apply(mp)
    return RigidTransform2D(theta, float(tx), float(ty))


def registration_chain(nose: np.ndarray) -> list[RigidTransform2D]:
    """Per-frame transforms mapping frame k onto frame 0 coordinates.

    Consecutive-frame estimates are composed, so frame k is registered to
    frame k-1, which is in turn registered to frame 0.
    """
    out = [RigidTransform2D.identity()]
    for k in range(1, len(nose)):
        step = estimate_rigid_transform(nose[k], nose[k - 1])  # current -> previous
        out.append(out[-1].compose(step))
    return out


# -- ROI grid ----------------------------------------------------------------


def layout_grid(mask: np.ndarray | None, shape: tuple[int, int] | None = None) -> RoiGrid:
    """Square blocks with exactly 10 across the mask's horizontal extent.

    Partial blocks at the right/bottom edges are dropped, as are blocks that
    contain no mask pixels.
    """
    if mask is None:
        if shape is None:
            raise ValueError("need a mask or an image shape")
        mask = np.ones(shape, dtype=bool)
    mask = np.asarray(mask) > 0
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        raise ValueError("mask is empty")
    x_min, x_max, y_min, y_max = cols.min(), cols.max(), rows.min(), rows.max()
    side = (x_max - x_min + 1) // N_BLOCKS_X
    if side < 1:
        raise ValueError("mask region narrower than 10 pixels")
    blocks = []
    for j in range((y_max - y_min + 1) // side):
        for i in range(N_BLOCKS_X):
            x0, y0 = int(x_min + i * side), int(y_min + j * side)
            if mask[y0 : y0 + side, x0 : x0 + side].any():
                blocks.append((x0, y0))
    return RoiGrid(tuple(blocks), int(side))


def warp_grid(grid: RoiGrid, t: RigidTransform2D, frame_shape: tuple[int, int]) -> WarpedGrid:
    """Locate registered-frame blocks in the current frame.

    ``t`` maps current-frame coordinates onto the registered (reference)
    frame, so block samples are pulled back through its inverse.
    """
    h, w = frame_shape
    inv = t.inverse()
    xs, ys, inside, valid = [], [], [], []
    for i in range(len(grid.blocks)):
        pts = inv.apply(grid.block_coords(i))
        x = np.rint(pts[:, 0]).astype(int)
        y = np.rint(pts[:, 1]).astype(int)
        ok = (x >= 0) & (x < w) & (y >= 0) & (y < h)
        xs.append(np.clip(x, 0, w - 1))
        ys.append(np.clip(y, 0, h - 1))
        inside.append(ok)
        valid.append(bool(ok.any()))
    return WarpedGrid(grid, xs, ys, inside, np.array(valid))


# -- temporal signals --------------------------------------------------------


def extract_temporal_signals(
    frames: list[FrameImage],
    grid: RoiGrid,
    masks: list[FrameImage] | None = None,
    transforms: list[RigidTransform2D] | None = None,
    channel: str = "green",
    fps: float = 30.0,
) -> TemporalSignalSet:
    """Sum of consecutive-frame channel differences over each registered block.

    A block pixel contributes to sample k only when it lands inside both
    frames k and k+1 (and on mask pixels of both, when masks are given).
    """
    if len(frames) < 2:
        raise ValueError("need at least 2 frames")
    if transforms is None:
        transforms = [RigidTransform2D.identity()] * len(frames)
    shape = (frames[0].height, frames[0].width)
    warped = []
    for t in transforms:
        w = warp_grid(grid, t, shape)
        warped.append((np.stack(w.xs), np.stack(w.ys), np.stack(w.inside)))
    chans = [(f.green if channel == "green" else f.red).astype(np.int64) for f in frames]
    n_blocks = len(grid.blocks)
    out = np.zeros((n_blocks, len(frames) - 1))
    valid = np.ones(n_blocks, dtype=bool)
    for k in range(len(frames) - 1):
        (xa, ya, ia), (xb, yb, ib) = warped[k], warped[k + 1]
        ok = ia & ib
        if masks is not None:
            ok &= (masks[k].pixels[ya, xa, 0] > 0) & (masks[k + 1].pixels[yb, xb, 0] > 0)
        valid &= ok.any(axis=1)
        out[:, k] = np.sum(np.where(ok, chans[k + 1][yb, xb] - chans[k][ya, xa], 0), axis=1)
    out[~valid] = 0.0
    return TemporalSignalSet(fps, out, channel, valid)


def signals_from_traces(trace: RoiTraceFile, channel: str = "green") -> TemporalSignalSet:
    """Temporal signals from per-ROI mean traces (frame differences of the means)."""
    return TemporalSignalSet(trace.fps, np.diff(trace.channel(channel), axis=1), channel)


# -- normalization and filtering ---------------------------------------------


def zscore(sig: TemporalSignalSet) -> TemporalSignalSet:
    x = sig.signals
    mean = x.mean(axis=1, keepdims=True)
    std = x.std(axis=1, ddof=1, keepdims=True) if x.shape[1] > 1 else np.zeros_like(mean)
    scale = np.maximum(np.abs(mean), np.abs(x).max(axis=1, keepdims=True))
    const = (std[:, 0] <= 1e-12 * np.maximum(scale[:, 0], 1e-300)) | (std[:, 0] == 0)
    out = np.zeros_like(x)
    ok = ~const
    out[ok] = (x[ok] - mean[ok]) / std[ok]
    return TemporalSignalSet(sig.fps, out, sig.channel, sig.valid & ok)


@lru_cache(maxsize=16)
def _smoother_bands(n: int, lam: float) -> np.ndarray:
    """I + lam^2 D2'D2 in upper banded storage (bandwidth 2)."""
    d2 = sparse.diags([1.0, -2.0, 1.0], [0, 1, 2], shape=(n - 2, n))
    a = (sparse.identity(n) + lam**2 * (d2.T @ d2)).todia()
    bands = np.zeros((3, n))
    for k in range(3):
        bands[2 - k, k:] = a.diagonal(k)
    return bands


def detrend(x, lam: float = 300.0) -> np.ndarray:
    """Smoothness-priors detrending: x minus (I + lam^2 D2'D2)^-1 x (along the last axis)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if n < 3:
        raise ValueError("detrend needs at least 3 samples")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    flat = x.reshape(-1, n).T
    trend = solveh_banded(_smoother_bands(n, float(lam)), flat)
    return (flat - trend).T.reshape(x.shape)


@lru_cache(maxsize=64)
def _bandpass_sos(fps: float, lo: float, hi: float) -> np.ndarray:
    return sps.butter(BANDPASS_ORDER, [lo, hi], btype="bandpass", fs=fps, output="sos")


def bandpass_padlen(fps: float, lo: float, hi: float) -> int:
    sos = _bandpass_sos(fps, lo, hi)
    # scipy.signal.sosfiltfilt's default edge padding
    n_zeros = min((sos[:, 2] == 0).sum(), (sos[:, 5] == 0).sum())
    return 3 * (2 * len(sos) + 1 - n_zeros)


def bandpass(x, fps: float, lo: float, hi: float) -> np.ndarray:
    """Zero-phase Butterworth band-pass (forward-backward)."""
    if not 0 < lo < hi < fps / 2:
        raise ValueError("need 0 < lo < hi < fps/2")
    x = np.asarray(x, dtype=float)
    if x.shape[-1] <= bandpass_padlen(fps, lo, hi):
        raise ValueError("window too short for band-pass warm-up")
    return sps.sosfiltfilt(_bandpass_sos(float(fps), float(lo), float(hi)), x, axis=-1)


def condition(sig: TemporalSignalSet, lo: float, hi: float, lam: float) -> TemporalSignalSet:
    """Detrend then band-pass every row.

    Run this on the whole session before cutting windows; filtering each 4 s
    window separately lets edge transients pull the spectral peak by 2-4 bpm.
    """
    x = bandpass(detrend(sig.signals, lam), sig.fps, lo, hi)
    return TemporalSignalSet(sig.fps, x, sig.channel, sig.valid.copy())
