"""Ablation table over seeded tone and burst sessions (mean MAE, err5 and rho per variant)."""

import argparse
import json

import numpy as np

from mombat.bench import burst_scenario, compute_metrics, synth_generate, tone_scenario
from mombat.ingest import PipelineConfig
from mombat.pipeline import VARIANTS, SessionInputs, run_variant

FAMILIES = {"tone": tone_scenario, "burst": burst_scenario}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", choices=list(FAMILIES), default="burst")
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--alpha", type=int, default=PipelineConfig.alpha)
    ap.add_argument("--noise", type=float, default=0.0, help="per-ROI Gaussian noise sigma")
    ap.add_argument("--json", help="also write the per-seed numbers here")
    args = ap.parse_args()
    cfg = PipelineConfig(alpha=args.alpha)

    out = {v: {"mae": [], "err5": [], "rho": []} for v in VARIANTS}
    for seed in range(args.seeds):
        trace, track, truth = synth_generate(FAMILIES[args.family](seed, noise_sigma=args.noise))
        inputs = SessionInputs(trace=trace, landmarks=track)
        for v in VARIANTS:
            plan, est = run_variant(v, inputs, cfg)
            rep = compute_metrics(est, truth, plan)
            for k in out[v]:
                out[v][k].append(getattr(rep, k))

    print(f"{args.family} sessions, {args.seeds} seeds, alpha={args.alpha}, noise={args.noise:g}")
    print(f"{'variant':<10} {'MAE':>7} {'err5 %':>7} {'rho':>6}")
    for v, m in out.items():
        print(f"{v:<10} {np.mean(m['mae']):7.2f} {np.mean(m['err5']):7.1f} {np.mean(m['rho']):6.3f}")
    if args.json:
        with open(args.json, "w") as f:
            json.dump(out, f, indent=2)


if __name__ == "__main__":
    main()
