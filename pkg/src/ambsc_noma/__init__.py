"""Energy-efficiency optimization for a backscatter-assisted cooperative
NOMA downlink: channel simulation, two-stage alternating optimizer, and a
Monte-Carlo experiment harness."""

__version__ = "0.1.0"

from .config import ScenarioConfig
from .pipeline import (RunResult, energy_efficiency, run_algorithm1,
                       run_noncoop_baseline)

__all__ = [
    "ScenarioConfig",
    "RunResult",
    "energy_efficiency",
    "run_algorithm1",
    "run_noncoop_baseline",
    "__version__",
]
