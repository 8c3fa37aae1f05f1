"""Deterministic simulator for a single-user 60 GHz interactive-video
downlink: phased-array beamforming, beacon-interval scheduling, bursty
traffic, and frame-latency metrics."""

from .config import ConfigError, ScenarioConfig, load_config
from .macsim import FrameRecord, RunResult, run
from .metrics import RunSummary, summarize

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "load_config",
    "FrameRecord",
    "RunResult",
    "run",
    "RunSummary",
    "summarize",
    "__version__",
]
