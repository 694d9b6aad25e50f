"""Benchmark scenarios, error metrics, run loop and command-line interface."""

from .config import load_config, read_config
from .errors import ErrorReport, compute_errors
from .runner import RunResult, reference_run, run
from .scenarios import SCENARIOS, ScenarioConfig, build_scenario

__all__ = ["SCENARIOS", "ErrorReport", "RunResult", "ScenarioConfig", "build_scenario", "compute_errors",
           "load_config", "read_config", "reference_run", "run"]
