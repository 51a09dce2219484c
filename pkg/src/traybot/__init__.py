"""Deterministic simulator of a mobile pick-and-place robot for a biscuit furnace line."""

from .controller import ActuatorCommand, ControllerConfig, ControllerState, MissionState
from .scenario import ConfigError, Scenario, load_scenario, load_scenario_file
from .sim import RunResult, run

__version__ = "0.1.0"

__all__ = [
    "ActuatorCommand",
    "ConfigError",
    "ControllerConfig",
    "ControllerState",
    "MissionState",
    "RunResult",
    "Scenario",
    "load_scenario",
    "load_scenario_file",
    "run",
]
