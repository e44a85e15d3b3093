"""MAE of PulseMod on burst sessions as the number of basis functions varies."""

import argparse

import numpy as np

from mombat.bench import burst_scenario, compute_metrics, synth_generate
from mombat.ingest import PipelineConfig
from mombat.pipeline import SessionInputs, run_variant


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--alphas", default="8,12,16,24,50")
    args = ap.parse_args()
    alphas = [int(a) for a in args.alphas.split(",")]

    rows = {"NorSys": []} | {f"alpha={a}": [] for a in alphas}
    for seed in range(args.seeds):
        trace, track, truth = synth_generate(burst_scenario(seed))
        inputs = SessionInputs(trace=trace, landmarks=track)
        plan, est = run_variant("NorSys", inputs)
        rows["NorSys"].append(compute_metrics(est, truth, plan).mae)
        for a in alphas:
            plan, est = run_variant("PulseMod", inputs, PipelineConfig(alpha=a))
            rows[f"alpha={a}"].append(compute_metrics(est, truth, plan).mae)

    print(f"{'setting':<10} {'mean MAE':>9}  per seed")
    for name, maes in rows.items():
        print(f"{name:<10} {np.mean(maes):9.1f}  " + " ".join(f"{m:.1f}" for m in maes))


if __name__ == "__main__":
    main()
