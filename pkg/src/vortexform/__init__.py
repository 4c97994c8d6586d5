"""Close formation flight control and simulation.

A follower aircraft tracks its drag-optimal station in a leader's
trailing-vortex wake using a cascaded command-filtered backstepping
controller with first-order disturbance observers on every loop, flown
against a 6-DOF truth model with injected model uncertainty and a
horseshoe-vortex wake.
"""

from .config import ConfigError, ScenarioConfig, read_config, scenario_config, write_config
from .sim import (RunMetrics, SimResult, SimulationAbort, compare_runs,
                  lateral_speed_study, run_scenario, trim_solve)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ScenarioConfig", "read_config", "scenario_config",
    "write_config", "RunMetrics", "SimResult", "SimulationAbort",
    "compare_runs", "lateral_speed_study", "run_scenario", "trim_solve",
    "__version__",
]
