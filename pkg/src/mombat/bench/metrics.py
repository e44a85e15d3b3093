"""Window-level error statistics against interpolated ground truth."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..ingest import GroundTruth
from ..tracker import HrEstimate
from .windows import WindowPlan


@dataclass
class MetricsReport:
    mu: float
    sigma: float
    mae: float
    err5: float
    rho: float
    rho_flagged: bool
    n_windows: int
    n_failed: int = 0
    table: list[dict] = field(default_factory=list)

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("table")
        return d


def metrics_from_series(pred, actual) -> tuple[float, float, float, float, float, bool]:
    """(mu, sigma, mae, err5 %, rho, rho_flagged) of pred - actual."""
    p, a = np.asarray(pred, dtype=float), np.asarray(actual, dtype=float)
    if p.size != a.size or p.size < 2:
        raise ValueError("need at least 2 paired windows")
    err = p - a
    mu, sigma = float(err.mean()), float(err.std())
    mae = float(np.abs(err).mean())
    err5 = float(100.0 * np.mean(np.abs(err) < 5.0))
    sp, sa = p.std(), a.std()
    if sp == 0 or sa == 0:
        rho, flagged = 0.0, True
    else:
        rho = float(np.clip(np.mean((p - p.mean()) * (a - a.mean())) / (sp * sa), -1.0, 1.0))
        flagged = False
    return mu, sigma, mae, err5, rho, flagged


def compute_metrics(pred: list[HrEstimate], truth: GroundTruth, plan: WindowPlan) -> MetricsReport:
    """Predictions against ground truth interpolated at window centers; failed windows are skipped."""
    if len(pred) != len(plan):
        raise ValueError("prediction count differs from window count")
    centers = np.array(plan.centers_s())
    if centers[0] < truth.times[0] - 1e-9 or centers[-1] > truth.times[-1] + 1e-9:
        raise ValueError("ground truth does not cover the session")
    actual = truth.at(centers)
    table, ps, acts = [], [], []
    for e, (s, stop), c, a in zip(pred, plan.windows, centers, actual):
        ok = math.isfinite(e.freq)
        table.append({
            "window": e.window_index, "start_frame": s, "end_frame": stop, "time_s": float(c),
            "pred_bpm": e.hr if ok else "", "freq_hz": e.freq if ok else "", "true_bpm": float(a),
            "error": (e.hr - float(a)) if ok else "", "flag": e.flag,
        })
        if ok:
            ps.append(e.hr)
            acts.append(a)
    mu, sigma, mae, err5, rho, flagged = metrics_from_series(ps, acts)
    return MetricsReport(mu, sigma, mae, err5, rho, flagged, len(ps), len(pred) - len(ps), table)


def table_csv(report: MetricsReport) -> str:
    buf = io.StringIO()
    cols = ["window", "start_frame", "end_frame", "time_s", "pred_bpm", "freq_hz", "true_bpm", "error", "flag"]
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for row in report.table:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def plot_csvs(report: MetricsReport) -> tuple[str, str]:
    """(predicted, actual) as two-column window,bpm CSVs."""
    pred = ["window,bpm"] + [f"{r['window']},{r['pred_bpm']}" for r in report.table]
    act = ["window,bpm"] + [f"{r['window']},{float(r['true_bpm'])!r}" for r in report.table]
    return "\n".join(pred) + "\n", "\n".join(act) + "\n"


def summary_json(reports: dict[str, MetricsReport], extra: dict | None = None) -> str:
    payload = {"variants": {k: v.summary() for k, v in reports.items()}}
    if extra:
        payload.update(extra)
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
