"""Seeded synthetic sessions: ROI traces, landmark tracks and ground truth.

Every disturbance is modeled as head motion ``m(t)`` over an interval. The
motion moves the boundary landmarks in z (scaled per landmark, with opposite
signs on the two sides of the face, as a yaw would) and changes the lighting
of every ROI in proportion to that ROI's skin gain, which is the same gain the
pulse enters with. A corruption burst uses smooth aperiodic motion; a spurious
tone uses sinusoidal motion at the tone frequency.

Randomness comes from ``numpy.random.default_rng(seed)`` (PCG64) only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from ..ingest import FrameImage, GroundTruth, Landmark, LandmarkTrack, ParseError, RoiTraceFile, _lines
from ..preprocess import RigidTransform2D

N_BOUNDARY = 17
N_NOSE = 9
N_EYE = 12
GT_RATE_HZ = 2.0


@dataclass(frozen=True)
class Burst:
    start: float  # s
    end: float  # s
    z_amp: float = 5.0
    trace_amp: float | None = None  # in pulse amplitudes; None: scenario default


@dataclass(frozen=True)
class Tone:
    freq: float  # Hz
    amp: float  # in pulse amplitudes
    start: float
    end: float
    z_amp: float | None = None  # None: scenario default


@dataclass(frozen=True)
class SyntheticScenario:
    duration_s: float = 60.0
    fps: float = 30.0
    hr_points: tuple[tuple[float, float], ...] = ((0.0, 72.0),)
    roi_count: int = 8
    pulse_amp: float = 1.0
    harmonic: float = 0.3
    noise_sigma: float = 0.0
    bursts: tuple[Burst, ...] = ()
    tones: tuple[Tone, ...] = ()
    burst_trace_amp: float = 8.0
    tone_z_amp: float = 5.0
    red_ratio: float = 0.25
    seed: int = 0

    def __post_init__(self):
        hr = [b for _, b in self.hr_points]
        if not self.hr_points or min(hr) < 42 or max(hr) > 240:
            raise ValueError("hr trajectory must stay within [42, 240] bpm")
        if self.duration_s <= 0 or self.fps <= 0 or self.roi_count < 1:
            raise ValueError("duration, fps and roi_count must be positive")

    @property
    def n_frames(self) -> int:
        return int(round(self.duration_s * self.fps))

    def bpm(self, t) -> np.ndarray:
        ts, bs = zip(*self.hr_points)
        return np.interp(t, ts, bs)


def _smooth_motion(rng: np.random.Generator, t: np.ndarray) -> np.ndarray:
    """Aperiodic motion: a few random in-band sinusoids, peak-normalized."""
    freqs = rng.uniform(0.8, 3.0, 3)
    phases = rng.uniform(0, 2 * np.pi, 3)
    amps = rng.uniform(0.5, 1.0, 3)
    m = sum(a * np.sin(2 * np.pi * f * t + p) for a, f, p in zip(amps, freqs, phases))
    return m / max(np.abs(m).max(), 1e-12)


def _taper(t: np.ndarray, start: float, end: float) -> np.ndarray:
    """Hann window over [start, end], exactly zero outside."""
    w = np.zeros_like(t)
    inside = (t >= start) & (t <= end)
    if end > start:
        w[inside] = np.sin(np.pi * (t[inside] - start) / (end - start)) ** 2
    return w


def synth_generate(scn: SyntheticScenario) -> tuple[RoiTraceFile, LandmarkTrack, GroundTruth]:
    rng = np.random.default_rng(scn.seed)
    n = scn.n_frames
    t = np.arange(n) / scn.fps

    gains = rng.uniform(0.5, 1.5, scn.roi_count)
    base_g = rng.uniform(90.0, 140.0, scn.roi_count)
    base_r = rng.uniform(140.0, 200.0, scn.roi_count)
    phase0 = rng.uniform(0, 2 * np.pi)

    phase = phase0 + 2 * np.pi * np.concatenate([[0.0], np.cumsum(scn.bpm(t[:-1]) / 60.0 / scn.fps)])
    pulse = np.sin(phase) + scn.harmonic * np.sin(2 * phase)

    light = np.zeros(n)  # common lighting disturbance, in pulse amplitudes
    zmove = np.zeros(n)  # boundary yaw displacement
    for b in scn.bursts:
        m = _smooth_motion(rng, t) * _taper(t, b.start, b.end)
        amp = scn.burst_trace_amp if b.trace_amp is None else b.trace_amp
        light += amp * m
        zmove += b.z_amp * m
    for tone in scn.tones:
        m = np.sin(2 * np.pi * tone.freq * t + rng.uniform(0, 2 * np.pi)) * _taper(t, tone.start, tone.end)
        light += tone.amp * m
        zmove += (scn.tone_z_amp if tone.z_amp is None else tone.z_amp) * m

    common = scn.pulse_amp * gains[:, None]
    green = base_g[:, None] + common * (pulse + light)[None, :]
    red = base_r[:, None] + common * (scn.red_ratio * pulse + light)[None, :]
    if scn.noise_sigma > 0:
        green = green + rng.normal(0.0, scn.noise_sigma, green.shape)
        red = red + rng.normal(0.0, scn.noise_sigma, red.shape)
    trace = RoiTraceFile(scn.fps, green, red)

    track = _landmarks(zmove, scn.fps)
    gt_t = np.arange(0.0, scn.duration_s + 1e-9, 1.0 / GT_RATE_HZ)
    truth = GroundTruth(gt_t, scn.bpm(gt_t))
    return trace, track, truth


def _landmarks(zmove: np.ndarray, fps: float) -> LandmarkTrack:
    ang = np.linspace(0.15 * np.pi, 0.85 * np.pi, N_BOUNDARY)
    bx, by = 50 + 40 * np.cos(ang), 40 + 45 * np.sin(ang)
    side = np.cos(ang) / np.abs(np.cos(ang)).max()  # +1 on one cheek, -1 on the other
    nose = [(50.0, 30.0 + 3 * j) for j in range(4)] + [(44.0 + 3 * j, 45.0) for j in range(5)]
    eyes = [(30.0 + 3 * (j % 6) + (j >= 6) * 28, 22.0) for j in range(N_EYE)]
    frames = []
    for k in range(zmove.size):
        pts = [Landmark(j, "boundary", float(bx[j]), float(by[j]), float(side[j] * zmove[k]))
               for j in range(N_BOUNDARY)]
        pts += [Landmark(27 + j, "nose", x, y, 10.0) for j, (x, y) in enumerate(nose)]
        pts += [Landmark(36 + j, "eye", x, y, 5.0) for j, (x, y) in enumerate(eyes)]
        frames.append(pts)
    return LandmarkTrack(frames, fps)


def render_frames(scn: SyntheticScenario, size: int = 64, max_theta: float = 0.05,
                  max_shift: float = 3.0, pulse_counts: float = 3.0,
                  pixel_noise: float = 0.5, shading: float = 0.4, gain_spread: float = 0.8,
                  strip: bool = False) -> tuple[list[FrameImage], list[FrameImage], LandmarkTrack, GroundTruth]:
    """Small rendered video of a textured face patch under slow in-plane motion.

    Every pixel of frame k shows the reference texture at ``T_k(p)``, where
    ``T_k`` maps frame k onto frame 0, plus the pulse scaled by a smooth skin
    gain map. Nose landmarks move with the face, so registration can undo the
    motion. Bursts and tones are not rendered. ``strip`` limits the skin mask
    to a band one block tall, which yields exactly 10 ROIs. With zero shading,
    gain spread and pixel noise every skin pixel rounds identically, so the
    block signals are exactly rank one.
    """
    rng = np.random.default_rng([scn.seed, 3])
    n = scn.n_frames
    t = np.arange(n) / scn.fps
    phase = rng.uniform(0, 2 * np.pi) + 2 * np.pi * np.concatenate(
        [[0.0], np.cumsum(scn.bpm(t[:-1]) / 60.0 / scn.fps)])
    pulse = np.sin(phase) + scn.harmonic * np.sin(2 * phase)

    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    c = (size - 1) / 2
    ref_mask = ((xx - c) / (0.35 * size)) ** 2 + ((yy - c) / (0.42 * size)) ** 2 <= 1.0
    if strip:
        x0, side = int(round(c - 0.3 * size)), int(0.6 * size) // 10
        ref_mask = (xx >= x0) & (xx < x0 + 10 * side) & (yy >= c - side / 2) & (yy < c + side / 2)
    texture = 110 + shading * ((xx - c) + 0.5 * (yy - c))
    gain = 1.0 + gain_spread * (np.exp(-((xx - c) ** 2 + (yy - c) ** 2) / (0.3 * size) ** 2) - 0.5)

    f1, f2 = rng.uniform(0.05, 0.2, 2)
    theta = max_theta * np.sin(2 * np.pi * f1 * t)
    tx = max_shift * np.sin(2 * np.pi * f2 * t + 1.0)
    ty = max_shift * np.cos(2 * np.pi * f1 * t)
    center = RigidTransform2D(0.0, -c, -c)
    back = RigidTransform2D(0.0, c, c)

    nose_ref = np.array([(c, c - 6 + 2 * j) for j in range(4)] + [(c - 4 + 2 * j, c + 2) for j in range(5)])
    base_track = _landmarks(np.zeros(n), scn.fps)
    frames, masks, lm_frames = [], [], []
    pix = np.column_stack([xx.ravel(), yy.ravel()])
    for k in range(n):
        to_ref = back.compose(RigidTransform2D(theta[k], tx[k], ty[k]).compose(center))
        q = np.rint(to_ref.apply(pix))
        qx = np.clip(q[:, 0], 0, size - 1).astype(int)
        qy = np.clip(q[:, 1], 0, size - 1).astype(int)
        inside = (q[:, 0] >= 0) & (q[:, 0] < size) & (q[:, 1] >= 0) & (q[:, 1] < size)
        val = texture[qy, qx] + pulse_counts * gain[qy, qx] * pulse[k]
        m = ref_mask[qy, qx] & inside
        g = np.where(m, val, 20.0).reshape(size, size)
        r = np.where(m, val * 1.3 + 20, 30.0).reshape(size, size)
        rgb = np.stack([r, g, 0.5 * g], axis=-1)
        rgb = np.clip(np.rint(rgb + rng.normal(0, pixel_noise, rgb.shape)), 0, 255).astype(np.uint8)
        frames.append(FrameImage(size, size, 3, rgb))
        masks.append(FrameImage(size, size, 1, (m.reshape(size, size, 1) * 255).astype(np.uint8)))
        nose = to_ref.inverse().apply(nose_ref)
        pts = [p for p in base_track.frames[k] if p.group != "nose"]
        pts += [Landmark(27 + j, "nose", float(x), float(y), 10.0) for j, (x, y) in enumerate(nose)]
        lm_frames.append(sorted(pts, key=lambda p: p.id))
    gt_t = np.arange(0.0, scn.duration_s + 1e-9, 1.0 / GT_RATE_HZ)
    return frames, masks, LandmarkTrack(lm_frames, scn.fps), GroundTruth(gt_t, scn.bpm(gt_t))


# -- scenario files ----------------------------------------------------------


def _parse_intervals(value: str, width: int, what: str) -> list[list[float]]:
    out = []
    for item in filter(None, (s.strip() for s in value.split(";"))):
        parts = item.split(":")
        if len(parts) not in (width, width + 1):
            raise ParseError(f"bad {what} entry {item!r}")
        try:
            out.append([float(p) for p in parts])
        except ValueError:
            raise ParseError(f"bad {what} entry {item!r}") from None
    return out


def parse_scenario(data: bytes | str) -> SyntheticScenario:
    """key=value scenario text.

    ``hr`` is ``t:bpm,t:bpm,...``; ``bursts`` is ``start:end:z_amp[:trace_amp];...``;
    ``tones`` is ``freq:amp:start:end[:z_amp];...``.
    """
    kw = {}
    names = {f.name: f for f in fields(SyntheticScenario)}
    for no, line in _lines(data):
        if "=" not in line:
            raise ParseError(f"line {no}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key == "hr":
                kw["hr_points"] = tuple(
                    tuple(float(v) for v in p.split(":")) for p in value.split(",") if p.strip()
                )
            elif key == "bursts":
                kw["bursts"] = tuple(Burst(*b) for b in _parse_intervals(value, 3, "burst"))
            elif key == "tones":
                kw["tones"] = tuple(Tone(*b) for b in _parse_intervals(value, 4, "tone"))
            elif key in names and key not in ("hr_points", "bursts", "tones"):
                kw[key] = type(names[key].default)(value)
            else:
                raise ParseError(f"line {no}: unknown scenario key {key!r}")
        except (TypeError, ValueError) as e:
            if isinstance(e, ParseError):
                raise
            raise ParseError(f"line {no}: bad value for {key}: {value!r}") from None
    try:
        return SyntheticScenario(**kw)
    except ValueError as e:
        raise ParseError(str(e)) from None


def serialize_scenario(scn: SyntheticScenario) -> str:
    def num(v):
        return repr(float(v))

    lines = []
    for f in fields(scn):
        v = getattr(scn, f.name)
        if f.name == "hr_points":
            lines.append("hr=" + ",".join(f"{num(a)}:{num(b)}" for a, b in v))
        elif f.name == "bursts":
            lines.append("bursts=" + ";".join(
                ":".join(num(x) for x in (b.start, b.end, b.z_amp) + (() if b.trace_amp is None else (b.trace_amp,)))
                for b in v))
        elif f.name == "tones":
            lines.append("tones=" + ";".join(
                ":".join(num(x) for x in (s.freq, s.amp, s.start, s.end) + (() if s.z_amp is None else (s.z_amp,)))
                for s in v))
        else:
            lines.append(f"{f.name}={v}")
    return "\n".join(lines) + "\n"


# -- scenario families used by the experiments ---------------------------------


def _random_intervals(rng: np.random.Generator, duration: float, count: int, length: float,
                      margin: float = 1.0, gap: float = 2.0) -> list[tuple[float, float]]:
    """Non-overlapping intervals, uniform over all placements with the given spacing."""
    slack = duration - 2 * margin - count * length - max(count - 1, 0) * gap
    if count < 1:
        return []
    if slack < 0:
        raise ValueError("could not place intervals")
    offsets = np.sort(rng.uniform(0.0, slack, count))
    starts = margin + offsets + np.arange(count) * (length + gap)
    return [(float(a), float(a + length)) for a in starts]


def burst_scenario(seed: int, fraction: float = 0.2, burst_len: float = 1.0,
                   noise_sigma: float = 0.0, **kw) -> SyntheticScenario:
    """Out-of-plane bursts covering ``fraction`` of the session."""
    rng = np.random.default_rng([seed, 1])
    duration = kw.pop("duration_s", 60.0)
    count = int(round(fraction * duration / burst_len))
    gap = burst_len * (1.0 - fraction) / fraction / 2  # half the mean spacing
    bursts = tuple(Burst(a, b) for a, b in _random_intervals(rng, duration, count, burst_len, gap=gap))
    hr0 = float(rng.uniform(60, 90))
    hr1 = float(np.clip(hr0 + rng.uniform(-10, 10), 42, 240))
    return SyntheticScenario(duration_s=duration, hr_points=((0.0, hr0), (duration, hr1)),
                             bursts=bursts, noise_sigma=noise_sigma, seed=seed, **kw)


def tone_scenario(seed: int, n_tones: int = 3, tone_len: float = 2.0, tone_amp: float = 2.0,
                  noise_sigma: float = 0.0, **kw) -> SyntheticScenario:
    """Spurious in-band tone bursts at ``tone_amp`` times the pulse amplitude."""
    rng = np.random.default_rng([seed, 2])
    duration = kw.pop("duration_s", 60.0)
    hr0 = float(rng.uniform(60, 90))
    hr1 = float(np.clip(hr0 + rng.uniform(-10, 10), 42, 240))
    tones = []
    for a, b in _random_intervals(rng, duration, n_tones, tone_len, margin=5.0, gap=4.0):
        # keep the tone well away from the pulse so a wrong pick is unambiguous
        f = float(rng.uniform(2.2, 3.5))
        tones.append(Tone(f, tone_amp, a, b))
    return SyntheticScenario(duration_s=duration, hr_points=((0.0, hr0), (duration, hr1)),
                             tones=tuple(tones), noise_sigma=noise_sigma, seed=seed, **kw)
