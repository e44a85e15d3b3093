"""Heart-rate monitoring from facial ROI traces with pulse modeling and Bayesian tracking."""

from .ingest import PipelineConfig
from .pipeline import VARIANTS, SessionInputs, run_variant

__all__ = ["PipelineConfig", "SessionInputs", "VARIANTS", "run_variant"]
__version__ = "0.1.0"
