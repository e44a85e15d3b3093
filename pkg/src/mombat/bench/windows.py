from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class WindowPlan:
    window_frames: int
    hop_frames: int
    windows: tuple[tuple[int, int], ...]
    fps: float = 30.0

    def __len__(self) -> int:
        return len(self.windows)

    def centers_s(self) -> list[float]:
        return [(s + e) / 2.0 / self.fps for s, e in self.windows]


def plan_windows(frames: int, fps: float, window_s: float = 4.0, hop_s: float = 0.5) -> WindowPlan:
    """All full windows of ``window_s`` seconds, advanced by ``hop_s``."""
    wf = int(round(window_s * fps))
    hf = max(1, int(round(hop_s * fps)))
    if frames < wf:
        raise ValueError(f"session of {frames} frames is shorter than one {wf}-frame window")
    n = (frames - wf) // hf + 1
    return WindowPlan(wf, hf, tuple((i * hf, i * hf + wf) for i in range(n)), fps)
