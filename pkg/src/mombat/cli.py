"""Command-line entry point: estimate, frames, synth, bench, metrics.

Exit codes: 0 success, 2 usage error, 1 data error. Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import ingest
from .bench import metrics as bench_metrics
from .bench.synth import parse_scenario, serialize_scenario, synth_generate
from .ingest import ParseError, PipelineConfig
from .pipeline import VARIANTS, SessionInputs, run_variant

SERIES_COLUMNS = ["window", "time_s", "hr_bpm", "freq_hz", "flag"]


class DataError(Exception):
    """Bad or unreadable input data; the message names the file."""


class UsageError(Exception):
    """Bad flag combination or value; the message names the flag."""


def _defaults_epilog() -> str:
    d = PipelineConfig()
    return (
        "pipeline defaults: "
        f"window {d.window_s:g} s, hop {d.hop_s:g} s, α = {d.alpha}, c = {d.c:g}, "
        f"ĉ = {d.c_hat:g}, band {d.band_lo:g}–{d.band_hi:g} Hz, n_p = {d.n_p}, "
        f"grid {d.grid_bpm:g} bpm, channel {d.channel}, basis {d.basis}, variant {d.variant}.\n"
        "precedence: built-in defaults < --config file < flags."
    )


_FLAG_HELP = {
    "fps": "frame rate in Hz (frame route; traces carry their own)",
    "window_s": "window length in seconds",
    "hop_s": "hop between windows in seconds",
    "alpha": "number of basis functions for pulse modeling",
    "c": "prior variance constant",
    "c_hat": "prior floor added to the fluctuation density",
    "band_lo": "pass-band low edge in Hz",
    "band_hi": "pass-band high edge in Hz",
    "n_p": "PSNR half-width in grid bins",
    "grid_bpm": "spectrum grid spacing in bpm",
    "channel": "color channel (green|red)",
    "basis": "modeling basis (fourier|legendre|polynomial)",
    "variant": f"pipeline variant ({'|'.join(VARIANTS)})",
    "modeling": "enable pulse modeling (true|false)",
    "tracking": "enable Bayesian tracking (true|false)",
    "detrend_lambda": "detrend smoothness weight (default scales as 300*(fps/30)^2)",
    "bss_floor": "whitening eigenvalue floor relative to the largest",
}


def _config_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("pipeline configuration")
    g.add_argument("--config", metavar="FILE", help="key=value config file")
    for f in dataclasses.fields(PipelineConfig):
        flag = "--" + f.name.replace("_", "-")
        shown = "auto" if f.default is None else f.default
        g.add_argument(flag, dest=f"cfg_{f.name}", metavar=f.name.upper(), default=None,
                       help=f"{_FLAG_HELP.get(f.name, f.name)} (default: {shown})")
    return p


def build_parser() -> argparse.ArgumentParser:
    parent = _config_parent()
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="print the resolved config to stderr")

    ap = argparse.ArgumentParser(
        prog="mombat",
        description="Heart-rate monitoring from face-video ROI traces.",
        epilog=_defaults_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")
    kw = dict(parents=[common, parent], epilog=_defaults_epilog(),
              formatter_class=argparse.RawDescriptionHelpFormatter)

    p = sub.add_parser("estimate", help="ROI traces (+ landmarks) to an HR series", **kw)
    p.add_argument("--trace", required=True, metavar="FILE")
    p.add_argument("--landmarks", metavar="FILE")
    p.add_argument("--out", metavar="FILE", help="series CSV (default: stdout)")

    p = sub.add_parser("frames", help="frame directory (+ masks) and landmarks to an HR series", **kw)
    p.add_argument("--frames", required=True, metavar="DIR", help="frame_*.ppm and optional mask_*.pgm")
    p.add_argument("--landmarks", metavar="FILE")
    p.add_argument("--out", metavar="FILE", help="series CSV (default: stdout)")

    p = sub.add_parser("synth", help="generate a synthetic session from a scenario file",
                       parents=[common])
    p.add_argument("--scenario", required=True, metavar="FILE")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--out", required=True, metavar="DIR")

    p = sub.add_parser("bench", help="run variants on a scenario or real inputs and report metrics", **kw)
    p.add_argument("--scenario", metavar="FILE")
    p.add_argument("--trace", metavar="FILE")
    p.add_argument("--landmarks", metavar="FILE")
    p.add_argument("--truth", metavar="FILE")
    p.add_argument("--variants", default=",".join(VARIANTS), help="comma-separated variant list")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--out", required=True, metavar="DIR")

    p = sub.add_parser("metrics", help="score an HR series against ground truth", parents=[common])
    p.add_argument("--pred", required=True, metavar="FILE", help="series CSV from estimate/frames")
    p.add_argument("--truth", required=True, metavar="FILE")
    p.add_argument("--out", metavar="FILE", help="summary JSON (default: stdout)")
    return ap


# -- helpers -----------------------------------------------------------------


def _read(path: str, parse):
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise DataError(f"{path}: {e.strerror or e}") from None
    try:
        return parse(data)
    except (ParseError, ValueError) as e:
        raise DataError(f"{path}: {e}") from None


def resolve_config(args) -> PipelineConfig:
    file_values = {}
    if args.config:
        file_values = _read(args.config, ingest.parse_config_text)
        try:
            PipelineConfig(**file_values)
        except (TypeError, ValueError) as e:
            raise DataError(f"{args.config}: {e}") from None
    flags = {}
    for f in dataclasses.fields(PipelineConfig):
        raw = getattr(args, f"cfg_{f.name}")
        if raw is None:
            continue
        try:
            flags[f.name] = ingest.coerce_field(f.name, raw)
        except ParseError as e:
            raise UsageError(f"--{f.name.replace('_', '-')}: {e}") from None
    try:
        cfg = ingest.build_config(file_values, flags)
    except (TypeError, ValueError) as e:
        raise UsageError(f"invalid configuration from flags: {e}") from None
    if args.verbose:
        print(ingest.serialize_config(cfg), end="", file=sys.stderr)
    return cfg


def _series_csv(plan, estimates) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SERIES_COLUMNS)
    for e, t in zip(estimates, plan.centers_s()):
        ok = math.isfinite(e.freq)
        w.writerow([e.window_index, repr(float(t)), e.hr if ok else "", repr(float(e.freq)) if ok else "", e.flag])
    return buf.getvalue()


def parse_series(data: bytes | str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(time_s, hr_bpm, ok) from a series CSV; failed windows have ok False."""
    text = data.decode() if isinstance(data, bytes) else data
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows or set(SERIES_COLUMNS) - set(rows[0]):
        raise ParseError(f"expected columns {','.join(SERIES_COLUMNS)}")
    t, hr, ok = [], [], []
    for no, r in enumerate(rows, start=2):
        try:
            t.append(float(r["time_s"]))
            good = r["hr_bpm"] not in ("", None)
            hr.append(float(r["hr_bpm"]) if good else math.nan)
            ok.append(good)
        except ValueError:
            raise ParseError(f"line {no}: bad number") from None
    return np.array(t), np.array(hr), np.array(ok, dtype=bool)


def _write(path: str | Path | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as e:
        raise DataError(f"{path}: {e.strerror or e}") from None


def _outdir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DataError(f"{path}: {e.strerror or e}") from None
    return out


def _run(inputs: SessionInputs, cfg: PipelineConfig, what: str):
    try:
        return run_variant(cfg.variant, inputs, cfg)
    except ValueError as e:
        raise DataError(f"{what}: {e}") from None


def _variants(spec: str) -> list[str]:
    names = [v.strip() for v in spec.split(",") if v.strip()]
    bad = [v for v in names if v not in VARIANTS]
    if bad or not names:
        raise UsageError(f"--variants: unknown variant {bad[0] if bad else spec!r}; choose from {', '.join(VARIANTS)}")
    return names


# -- commands ----------------------------------------------------------------


def cmd_estimate(args) -> None:
    cfg = resolve_config(args)
    trace = _read(args.trace, ingest.parse_roi_trace)
    lm = _read(args.landmarks, ingest.parse_landmarks) if args.landmarks else None
    plan, est = _run(SessionInputs(trace=trace, landmarks=lm), cfg, args.trace)
    _write(args.out, _series_csv(plan, est))


def cmd_frames(args) -> None:
    cfg = resolve_config(args)
    try:
        frames, masks = ingest.load_frame_dir(args.frames)
    except (ParseError, ValueError, OSError) as e:
        raise DataError(f"{args.frames}: {e}") from None
    lm = _read(args.landmarks, ingest.parse_landmarks) if args.landmarks else None
    inputs = SessionInputs(frames=frames, masks=masks, landmarks=lm, fps=cfg.fps)
    plan, est = _run(inputs, cfg, args.frames)
    _write(args.out, _series_csv(plan, est))


def _scenario(args):
    scn = _read(args.scenario, parse_scenario)
    if args.seed is not None:
        scn = dataclasses.replace(scn, seed=args.seed)
    return scn


def cmd_synth(args) -> None:
    scn = _scenario(args)
    trace, lm, gt = synth_generate(scn)
    out = _outdir(args.out)
    (out / "trace.csv").write_bytes(ingest.serialize_roi_trace(trace))
    (out / "landmarks.csv").write_bytes(ingest.serialize_landmarks(lm, scn.fps))
    (out / "truth.csv").write_bytes(ingest.serialize_ground_truth(gt))
    (out / "scenario.cfg").write_text(serialize_scenario(scn))


def cmd_bench(args) -> None:
    cfg = resolve_config(args)
    variants = _variants(args.variants)
    if args.scenario:
        if args.trace or args.truth:
            raise UsageError("--scenario excludes --trace/--truth")
        scn = _scenario(args)
        trace, lm, gt = synth_generate(scn)
        source = {"scenario": args.scenario, "seed": scn.seed}
    else:
        if not (args.trace and args.truth):
            raise UsageError("bench needs --scenario, or --trace and --truth")
        trace = _read(args.trace, ingest.parse_roi_trace)
        lm = _read(args.landmarks, ingest.parse_landmarks) if args.landmarks else None
        gt = _read(args.truth, ingest.parse_ground_truth)
        source = {"trace": args.trace, "truth": args.truth}
    inputs = SessionInputs(trace=trace, landmarks=lm)
    out = _outdir(args.out)
    reports = {}
    for v in variants:
        plan, est = _run(inputs, cfg.replace(variant=v), args.scenario or args.trace)
        try:
            rep = bench_metrics.compute_metrics(est, gt, plan)
        except ValueError as e:
            raise DataError(f"{args.truth or args.scenario}: {e}") from None
        reports[v] = rep
        (out / f"table_{v}.csv").write_text(bench_metrics.table_csv(rep))
        pred, act = bench_metrics.plot_csvs(rep)
        (out / f"plot_{v}_pred.csv").write_text(pred)
        (out / f"plot_{v}_actual.csv").write_text(act)
    extra = {"source": source, "config": dataclasses.asdict(cfg)}
    (out / "summary.json").write_text(bench_metrics.summary_json(reports, extra))


def cmd_metrics(args) -> None:
    t, hr, ok = _read(args.pred, parse_series)
    gt = _read(args.truth, ingest.parse_ground_truth)
    if t.size and (t.min() < gt.times[0] - 1e-9 or t.max() > gt.times[-1] + 1e-9):
        raise DataError(f"{args.truth}: ground truth does not cover the predicted series")
    try:
        mu, sigma, mae, err5, rho, flagged = bench_metrics.metrics_from_series(hr[ok], gt.at(t[ok]))
    except ValueError as e:
        raise DataError(f"{args.pred}: {e}") from None
    payload = {"mu": mu, "sigma": sigma, "mae": mae, "err5": err5, "rho": rho,
               "rho_flagged": flagged, "n_windows": int(ok.sum()), "n_failed": int((~ok).sum())}
    _write(args.out, json.dumps(payload, indent=2, sort_keys=True) + "\n")


COMMANDS = {"estimate": cmd_estimate, "frames": cmd_frames, "synth": cmd_synth,
            "bench": cmd_bench, "metrics": cmd_metrics}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        COMMANDS[args.command](args)
    except UsageError as e:
        print(f"mombat {args.command}: error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"mombat {args.command}: error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
