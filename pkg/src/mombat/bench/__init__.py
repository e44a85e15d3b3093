from .metrics import MetricsReport, compute_metrics, metrics_from_series
from .synth import Burst, SyntheticScenario, Tone, burst_scenario, synth_generate, tone_scenario
from .windows import WindowPlan, plan_windows

__all__ = [
    "Burst", "MetricsReport", "SyntheticScenario", "Tone", "WindowPlan", "burst_scenario",
    "compute_metrics", "metrics_from_series", "plan_windows", "synth_generate", "tone_scenario",
]
