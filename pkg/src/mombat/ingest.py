"""Readers and writers for traces, landmark tracks, frames, ground truth and config."""

from __future__ import annotations

import dataclasses
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

LANDMARK_GROUPS = ("nose", "boundary", "eye", "other")
HR_MIN_BPM = 42.0
HR_MAX_BPM = 240.0


class ParseError(ValueError):
    """Raised when an input file does not match its declared format."""


@dataclass(frozen=True)
class RoiTraceFile:
    """Per-ROI mean intensities, one column per frame."""

    fps: float
    green: np.ndarray
    red: np.ndarray | None = None

    def __post_init__(self):
        green = np.asarray(self.green, dtype=float)
        if green.ndim != 2:
            raise ParseError("green matrix must be 2-D (rois x frames)")
        if green.shape[0] < 1 or green.shape[1] < 2:
            raise ParseError("trace needs at least 1 ROI and 2 frames")
        if not np.all(np.isfinite(green)):
            raise ParseError("non-finite green intensity")
        if not self.fps > 0:
            raise ParseError(f"fps must be positive, got {self.fps}")
        object.__setattr__(self, "green", green)
        if self.red is not None:
            red = np.asarray(self.red, dtype=float)
            if red.shape != green.shape:
                raise ParseError("red matrix shape differs from green")
            if not np.all(np.isfinite(red)):
                raise ParseError("non-finite red intensity")
            object.__setattr__(self, "red", red)

    @property
    def rois(self) -> int:
        return self.green.shape[0]

    @property
    def frames(self) -> int:
        return self.green.shape[1]

    def channel(self, name: str) -> np.ndarray:
        if name == "green":
            return self.green
        if name == "red":
            if self.red is None:
                raise ParseError("trace has no red channel")
            return self.red
        raise ValueError(f"unknown channel {name!r}")


@dataclass(frozen=True)
class Landmark:
    id: int
    group: str
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class LandmarkTrack:
    """Per-frame 3-D landmark sets; every frame carries the same ids."""

    frames: list[list[Landmark]]
    fps: float | None = None

    def __post_init__(self):
        if not self.frames:
            raise ParseError("landmark track has no frames")
        ref = None
        for k, pts in enumerate(self.frames):
            for p in pts:
                if p.group not in LANDMARK_GROUPS:
                    raise ParseError(f"unknown landmark group {p.group!r}")
            ids = sorted(p.id for p in pts)
            if len(set(ids)) != len(ids):
                raise ParseError(f"duplicate landmark id in frame {k}")
            if ref is None:
                ref = ids
            elif ids != ref:
                raise ParseError(f"landmark id set of frame {k} differs from frame 0")

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    def group_array(self, group: str) -> np.ndarray:
        """(frames, points, 3) array of one group, points ordered by id."""
        out = []
        for pts in self.frames:
            sel = sorted((p for p in pts if p.group == group), key=lambda p: p.id)
            out.append([(p.x, p.y, p.z) for p in sel])
        return np.asarray(out, dtype=float).reshape(len(self.frames), -1, 3)

    def slice(self, start: int, stop: int) -> LandmarkTrack:
        return LandmarkTrack(self.frames[start:stop], self.fps)


@dataclass(frozen=True)
class FrameImage:
    width: int
    height: int
    channels: int
    pixels: np.ndarray  # (height, width, channels) uint8

    def __post_init__(self):
        if self.pixels.size != self.width * self.height * self.channels:
            raise ParseError("pixel count does not match dimensions")

    @property
    def green(self) -> np.ndarray:
        return self.pixels[:, :, 1 if self.channels == 3 else 0]

    @property
    def red(self) -> np.ndarray:
        return self.pixels[:, :, 0]


@dataclass(frozen=True)
class GroundTruth:
    times: np.ndarray
    hr: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        hr = np.asarray(self.hr, dtype=float)
        if times.shape != hr.shape or times.ndim != 1 or times.size == 0:
            raise ParseError("ground truth needs matching, nonempty time and hr columns")
        if np.any(np.diff(times) <= 0):
            raise ParseError("ground-truth times must be strictly increasing")
        if np.any((hr < HR_MIN_BPM) | (hr > HR_MAX_BPM)) or not np.all(np.isfinite(hr)):
            raise ParseError(f"ground-truth hr outside [{HR_MIN_BPM:g}, {HR_MAX_BPM:g}] bpm")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "hr", hr)

    def at(self, t) -> np.ndarray:
        return np.interp(t, self.times, self.hr)


@dataclass
class PipelineConfig:
    fps: float = 30.0
    window_s: float = 4.0
    hop_s: float = 0.5
    alpha: int = 50
    c: float = 4.0
    c_hat: float = 0.4
    band_lo: float = 0.7
    band_hi: float = 4.0
    n_p: int = 2
    grid_bpm: float = 1.0
    channel: str = "green"
    basis: str = "fourier"
    variant: str = "MOMBAT"
    modeling: bool = True
    tracking: bool = True
    detrend_lambda: float | None = None
    bss_floor: float = 1e-10  # whitening keeps eigenvalues >= bss_floor * max

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not 0 < self.band_lo < self.band_hi:
            raise ValueError("need 0 < band_lo < band_hi")
        if not 0 < self.hop_s <= self.window_s:
            raise ValueError("need 0 < hop_s <= window_s")
        if not self.fps > 0:
            raise ValueError("fps must be positive")
        if self.alpha < 1 or self.alpha >= self.window_frames:
            raise ValueError(f"alpha must lie in [1, {self.window_frames - 1}]")
        if self.channel not in ("green", "red"):
            raise ValueError(f"unknown channel {self.channel!r}")
        if self.basis not in ("fourier", "legendre", "polynomial"):
            raise ValueError(f"unknown basis {self.basis!r}")
        if not 0 < self.bss_floor < 1:
            raise ValueError("bss_floor must lie in (0, 1)")
        if self.n_p < 0 or self.grid_bpm <= 0 or self.c <= 0 or self.c_hat < 0:
            raise ValueError("n_p, grid_bpm, c and c_hat out of range")

    @property
    def window_frames(self) -> int:
        return int(round(self.window_s * self.fps))

    @property
    def hop_frames(self) -> int:
        return max(1, int(round(self.hop_s * self.fps)))

    @property
    def lam(self) -> float:
        # detrend smoothness weight: 300 at 30 fps; the cutoff sits near
        # fps / (2 pi sqrt(lambda)), so lambda scales with fps^2 to hold it in Hz
        if self.detrend_lambda is not None:
            return self.detrend_lambda
        return 300.0 * (self.fps / 30.0) ** 2

    def replace(self, **changes) -> PipelineConfig:
        return dataclasses.replace(self, **changes)


# -- helpers -----------------------------------------------------------------


def _text(data: bytes | str) -> str:
    if isinstance(data, bytes):
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"not UTF-8 text: {e}") from None
    return data


def _lines(data: bytes | str) -> list[tuple[int, str]]:
    out = []
    for no, line in enumerate(_text(data).splitlines(), start=1):
        line = line.strip()
        if line and not line.startswith("#"):
            out.append((no, line))
    return out


def _fps_header(lines: list[tuple[int, str]]) -> tuple[float, list[tuple[int, str]]]:
    if not lines or not lines[0][1].lower().startswith("fps="):
        raise ParseError("malformed header: expected 'fps=<float>' on the first line")
    try:
        fps = float(lines[0][1].split("=", 1)[1])
    except ValueError:
        raise ParseError(f"malformed header: {lines[0][1]!r}") from None
    if not (fps > 0 and math.isfinite(fps)):
        raise ParseError(f"fps must be positive, got {fps}")
    return fps, lines[1:]


def _float(cell: str, no: int) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise ParseError(f"line {no}: non-numeric cell {cell!r}") from None
    if not math.isfinite(v):
        raise ParseError(f"line {no}: non-finite cell {cell!r}")
    return v


def _int(cell: str, no: int) -> int:
    try:
        return int(cell)
    except ValueError:
        raise ParseError(f"line {no}: non-integer cell {cell!r}") from None


# -- ROI traces --------------------------------------------------------------


def parse_roi_trace(data: bytes | str) -> RoiTraceFile:
    fps, rows = _fps_header(_lines(data))
    if rows and rows[0][1].replace(" ", "").lower().startswith("frame,roi"):
        rows = rows[1:]
    if not rows:
        raise ParseError("trace has no data rows")
    cells: dict[tuple[int, int], list[float]] = {}
    width = None
    for no, line in rows:
        parts = [p.strip() for p in line.split(",")]
        if len(parts) not in (3, 4):
            raise ParseError(f"line {no}: expected frame,roi,green[,red]")
        if width is None:
            width = len(parts)
        elif len(parts) != width:
            raise ParseError(f"line {no}: red column present on some rows only")
        frame, roi = _int(parts[0], no), _int(parts[1], no)
        if frame < 0 or roi < 0:
            raise ParseError(f"line {no}: negative frame or roi index")
        if (frame, roi) in cells:
            raise ParseError(f"line {no}: duplicate entry for frame {frame}, roi {roi}")
        cells[(frame, roi)] = [_float(p, no) for p in parts[2:]]

    per_frame: dict[int, set[int]] = {}
    for frame, roi in cells:
        per_frame.setdefault(frame, set()).add(roi)
    n_frames = max(per_frame) + 1
    if sorted(per_frame) != list(range(n_frames)):
        raise ParseError("frame indices must be contiguous from 0")
    n_rois = len(per_frame[0])
    for frame, rois in per_frame.items():
        if rois != set(range(n_rois)):
            raise ParseError(f"inconsistent ROI count in frame {frame}")

    green = np.empty((n_rois, n_frames))
    red = np.empty((n_rois, n_frames)) if width == 4 else None
    for (frame, roi), vals in cells.items():
        green[roi, frame] = vals[0]
        if red is not None:
            red[roi, frame] = vals[1]
    return RoiTraceFile(fps, green, red)


def serialize_roi_trace(trace: RoiTraceFile) -> bytes:
    buf = io.StringIO()
    buf.write(f"fps={float(trace.fps)!r}\n")
    buf.write("frame,roi,green" + (",red" if trace.red is not None else "") + "\n")
    for k in range(trace.frames):
        for i in range(trace.rois):
            row = f"{k},{i},{float(trace.green[i, k])!r}"
            if trace.red is not None:
                row += f",{float(trace.red[i, k])!r}"
            buf.write(row + "\n")
    return buf.getvalue().encode()


# -- landmarks ---------------------------------------------------------------


def parse_landmarks(data: bytes | str) -> LandmarkTrack:
    fps, rows = _fps_header(_lines(data))
    if rows and rows[0][1].replace(" ", "").lower().startswith("frame,id"):
        rows = rows[1:]
    if not rows:
        raise ParseError("landmark file has no data rows")
    frames: dict[int, list[Landmark]] = {}
    for no, line in rows:
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 6:
            raise ParseError(f"line {no}: expected frame,id,group,x,y,z")
        group = parts[2].lower()
        if group not in LANDMARK_GROUPS:
            raise ParseError(f"line {no}: unknown landmark group {parts[2]!r}")
        frame = _int(parts[0], no)
        lm = Landmark(_int(parts[1], no), group, *(_float(p, no) for p in parts[3:]))
        frames.setdefault(frame, []).append(lm)
    n = max(frames) + 1
    if sorted(frames) != list(range(n)):
        raise ParseError("frame indices must be contiguous from 0")
    return LandmarkTrack([frames[k] for k in range(n)], fps)


def serialize_landmarks(track: LandmarkTrack, fps: float | None = None) -> bytes:
    fps = fps if fps is not None else (track.fps or 30.0)
    buf = io.StringIO()
    buf.write(f"fps={float(fps)!r}\nframe,id,group,x,y,z\n")
    for k, pts in enumerate(track.frames):
        for p in pts:
            buf.write(f"{k},{p.id},{p.group},{float(p.x)!r},{float(p.y)!r},{float(p.z)!r}\n")
    return buf.getvalue().encode()


# -- frames ------------------------------------------------------------------


def _ppm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ParseError("truncated header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates header from raster
    return tokens, pos + 1


def decode_ppm(data: bytes) -> FrameImage:
    if data[:2] not in (b"P6", b"P5"):
        raise ParseError("bad magic: expected P6 or P5")
    channels = 3 if data[:2] == b"P6" else 1
    tokens, offset = _ppm_tokens(data, 4)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ParseError("malformed header") from None
    if maxval != 255:
        raise ParseError(f"maxval must be 255, got {maxval}")
    if width <= 0 or height <= 0:
        raise ParseError("non-positive image dimensions")
    need = width * height * channels
    raster = data[offset : offset + need]
    if len(raster) < need:
        raise ParseError(f"truncated payload: expected {need} bytes, got {len(raster)}")
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, channels)
    return FrameImage(width, height, channels, pixels.copy())


def encode_ppm(img: FrameImage) -> bytes:
    magic = b"P6" if img.channels == 3 else b"P5"
    header = magic + f"\n{img.width} {img.height}\n255\n".encode()
    return header + np.ascontiguousarray(img.pixels, dtype=np.uint8).tobytes()


def load_frame_dir(path: str | Path) -> tuple[list[FrameImage], list[FrameImage] | None]:
    """Read ``frame_%06d.ppm`` files and, if all present, ``mask_%06d.pgm`` files."""
    path = Path(path)
    names = sorted(path.glob("frame_*.ppm"))
    if not names:
        raise ParseError(f"{path}: no frame_*.ppm files")
    frames = [decode_ppm(p.read_bytes()) for p in names]
    mask_names = [p.with_name(p.name.replace("frame_", "mask_")).with_suffix(".pgm") for p in names]
    if not any(m.exists() for m in mask_names):
        return frames, None
    missing = [m.name for m in mask_names if not m.exists()]
    if missing:
        raise ParseError(f"{path}: mask files missing for some frames, e.g. {missing[0]}")
    masks = [decode_ppm(m.read_bytes()) for m in mask_names]
    for m in masks:
        if m.channels != 1 or not np.all(np.isin(m.pixels, (0, 255))):
            raise ParseError(f"{path}: masks must be single-channel with values 0/255")
    return frames, masks


# -- ground truth ------------------------------------------------------------


def parse_ground_truth(data: bytes | str) -> GroundTruth:
    rows = _lines(data)
    if rows and rows[0][1].replace(" ", "").lower().startswith("time"):
        rows = rows[1:]
    times, hr = [], []
    for no, line in rows:
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise ParseError(f"line {no}: expected time_s,hr_bpm")
        times.append(_float(parts[0], no))
        hr.append(_float(parts[1], no))
    if not times:
        raise ParseError("ground truth has no rows")
    return GroundTruth(np.array(times), np.array(hr))


def serialize_ground_truth(gt: GroundTruth) -> bytes:
    lines = ["time_s,hr_bpm"] + [f"{float(t)!r},{float(h)!r}" for t, h in zip(gt.times, gt.hr)]
    return ("\n".join(lines) + "\n").encode()


# -- config ------------------------------------------------------------------

_BOOL = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def coerce_field(name: str, value: str):
    """Convert a textual value to the type of the PipelineConfig field ``name``."""
    fields = {f.name: f for f in dataclasses.fields(PipelineConfig)}
    if name not in fields:
        raise ParseError(f"unknown config key {name!r}")
    default = fields[name].default
    if name == "detrend_lambda":
        return None if value.lower() in ("", "none") else float(value)
    if isinstance(default, bool):
        if value.lower() not in _BOOL:
            raise ParseError(f"{name}: expected a boolean, got {value!r}")
        return _BOOL[value.lower()]
    try:
        return type(default)(value)
    except ValueError:
        raise ParseError(f"{name}: cannot parse {value!r}") from None


def parse_config_text(data: bytes | str) -> dict:
    """key=value lines to a dict of typed PipelineConfig overrides."""
    out = {}
    for no, line in _lines(data):
        if "=" not in line:
            raise ParseError(f"line {no}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = coerce_field(key, value)
    return out


def build_config(file_values: dict | None = None, flag_values: dict | None = None) -> PipelineConfig:
    """Defaults < config file < flags."""
    merged = {}
    merged.update(file_values or {})
    merged.update({k: v for k, v in (flag_values or {}).items() if v is not None})
    return PipelineConfig(**merged)


def serialize_config(cfg: PipelineConfig) -> str:
    return "".join(f"{f.name}={getattr(cfg, f.name)}\n" for f in dataclasses.fields(cfg))
