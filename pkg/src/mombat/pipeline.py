"""Per-window analysis and whole-session runs of the ablation variants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bss, preprocess, pulsemodel, quality, spectral, tracker
from .bench.windows import WindowPlan, plan_windows
from .ingest import FrameImage, LandmarkTrack, PipelineConfig, RoiTraceFile
from .tracker import HrEstimate


@dataclass(frozen=True)
class Components:
    channel: str
    registration: bool
    basis: str | None  # None: no pulse modeling
    tracking: bool


VARIANTS: dict[str, Components] = {
    "NorSysR": Components("red", False, None, False),
    "NorSysI": Components("green", False, None, False),
    "NorSys": Components("green", True, None, False),
    "PulseModP": Components("green", True, "polynomial", False),
    "PulseModL": Components("green", True, "legendre", False),
    "PulseMod": Components("green", True, "fourier", False),
    "BayTrack": Components("green", True, None, True),
    "MOMBAT": Components("green", True, "fourier", True),
}


def components_for(cfg: PipelineConfig) -> Components:
    if cfg.variant not in VARIANTS:
        raise ValueError(f"unknown variant {cfg.variant!r}; choose from {', '.join(VARIANTS)}")
    comp = VARIANTS[cfg.variant]
    return Components(
        comp.channel,
        comp.registration,
        comp.basis if cfg.modeling else None,
        comp.tracking and cfg.tracking,
    )


@dataclass
class SessionInputs:
    """Either per-ROI traces or raw frames (with optional masks), plus landmarks."""

    trace: RoiTraceFile | None = None
    frames: list[FrameImage] | None = None
    masks: list[FrameImage] | None = None
    landmarks: LandmarkTrack | None = None
    fps: float | None = None
    _signals: dict = field(default_factory=dict, repr=False)

    @property
    def n_frames(self) -> int:
        if self.trace is not None:
            return self.trace.frames
        if self.frames is not None:
            return len(self.frames)
        raise ValueError("no trace or frames given")

    def signals(self, channel: str, registration: bool, fps: float) -> preprocess.TemporalSignalSet:
        # traces are per-ROI means already taken on registered blocks, so the
        # registration switch only affects the raw-frame route
        key = (channel, registration if self.trace is None else None)
        if key not in self._signals:
            self._signals[key] = self._extract(channel, registration, fps)
        return self._signals[key]

    def filtered(self, channel: str, registration: bool, cfg: PipelineConfig) -> preprocess.TemporalSignalSet:
        key = ("filtered", channel, registration if self.trace is None else None,
               cfg.band_lo, cfg.band_hi, cfg.lam)
        if key not in self._signals:
            raw = self.signals(channel, registration, cfg.fps)
            self._signals[key] = preprocess.condition(raw, cfg.band_lo, cfg.band_hi, cfg.lam)
        return self._signals[key]

    def _extract(self, channel, registration, fps):
        if self.trace is not None:
            return preprocess.signals_from_traces(self.trace, channel)
        frames = self.frames
        grid = preprocess.layout_grid(
            self.masks[0].pixels[:, :, 0] if self.masks else None,
            (frames[0].height, frames[0].width),
        )
        transforms = None
        if registration:
            if self.landmarks is None:
                raise ValueError("registration needs nose landmarks")
            nose = self.landmarks.group_array("nose")
            if nose.shape[1] < 2:
                raise ValueError("registration needs at least 2 nose landmarks")
            transforms = preprocess.registration_chain(nose[:, :, :2])
        return preprocess.extract_temporal_signals(frames, grid, self.masks, transforms, channel, fps)


@dataclass
class WindowResult:
    spectrum: spectral.Spectrum | None
    gamma: float
    pulse: np.ndarray | None = None
    modeled: np.ndarray | None = None
    flag: str = ""


def analyze_window(sig: preprocess.TemporalSignalSet, q: np.ndarray | None, cfg: PipelineConfig,
                   basis_kind: str | None, index: int = -1) -> WindowResult:
    """Z-score, unmix, optionally model, and take the band spectrum of one filtered window."""
    cond = preprocess.zscore(sig)
    if not cond.valid.any():
        return WindowResult(None, 0.0, flag="no_valid_roi")
    pulse, unmix = bss.extract_pulse(cond, cfg.bss_floor)
    x = pulse.samples
    modeled, flag = None, "bss_fallback" if unmix.fallback else ""
    if basis_kind is not None:
        basis = pulsemodel.build_basis(basis_kind, cfg.alpha, x.size)
        if q is None:
            q, flag = np.ones(x.size), "no_quality"
        try:
            modeled = pulsemodel.reconstruct(pulsemodel.fit_weighted(x, basis, q), basis)
        except pulsemodel.InsufficientSupport:
            flag = "insufficient_support"
    spec = spectral.compute_spectrum(
        modeled if modeled is not None else x, sig.fps, cfg.band_lo, cfg.band_hi, cfg.grid_bpm, index
    )
    if not np.any(spec.mags > 0):
        return WindowResult(None, 0.0, x, modeled, "zero_spectrum")
    return WindowResult(spec, quality.psnr(spec, cfg.n_p), x, modeled, flag)


def window_quality(deviations: np.ndarray | None, start: int, stop: int) -> np.ndarray | None:
    """Quality of the frame pairs inside frames [start, stop)."""
    if deviations is None:
        return None
    return quality.quality_from_deviations(deviations[start : stop - 1])


def analyze_session(inputs: SessionInputs, cfg: PipelineConfig,
                    plan: WindowPlan | None = None) -> tuple[WindowPlan, list[WindowResult]]:
    comp = components_for(cfg)
    fps = inputs.trace.fps if inputs.trace is not None else (inputs.fps or cfg.fps)
    cfg = cfg.replace(fps=fps)
    if plan is None:
        plan = plan_windows(inputs.n_frames, fps, cfg.window_s, cfg.hop_s)
    if inputs.landmarks is not None and inputs.landmarks.n_frames != inputs.n_frames:
        raise ValueError("landmark track and video differ in frame count")
    sig = inputs.filtered(comp.channel, comp.registration, cfg)
    dev = None
    if comp.basis is not None and inputs.landmarks is not None:
        dev = quality.out_of_plane_deviations(inputs.landmarks)
    results = []
    for i, (s, e) in enumerate(plan.windows):
        q = window_quality(dev, s, e)
        results.append(analyze_window(sig.window(s, e - 1), q, cfg, comp.basis, i))
    return plan, results


def estimates_from_results(results: list[WindowResult], cfg: PipelineConfig,
                           tracking: bool) -> list[HrEstimate]:
    if tracking:
        est = tracker.track_sequence([r.spectrum for r in results], [r.gamma for r in results],
                                     cfg.c, cfg.c_hat)
        return [HrEstimate(e.window_index, e.freq, e.hr, e.posterior_peak, e.flag or r.flag)
                for e, r in zip(est, results)]
    out = []
    for i, r in enumerate(results):
        if r.spectrum is None:
            out.append(HrEstimate(i, math.nan, 0, math.nan, r.flag or "failed"))
            continue
        f, hr = spectral.peak_hr(r.spectrum)
        out.append(HrEstimate(i, f, hr, math.nan, r.flag))
    return out


def run_variant(variant: str, inputs: SessionInputs, cfg: PipelineConfig | None = None,
                plan: WindowPlan | None = None) -> tuple[WindowPlan, list[HrEstimate]]:
    cfg = (cfg or PipelineConfig()).replace(variant=variant)
    comp = components_for(cfg)
    plan, results = analyze_session(inputs, cfg, plan)
    return plan, estimates_from_results(results, cfg, comp.tracking)
