"""Experiment configuration, orchestration, report emission and CLI."""

from .config import ExperimentConfig, load_config, parse_config, parse_weight
from .emit import emit
from .experiments import (
    ConvergenceReport,
    VerifyReport,
    run_denisov_experiment,
    run_experiment,
    run_ratio_experiment,
    run_verify,
    run_weaklimit_experiment,
)

__all__ = [
    "ConvergenceReport", "ExperimentConfig", "VerifyReport", "emit", "load_config",
    "parse_config", "parse_weight", "run_denisov_experiment", "run_experiment",
    "run_ratio_experiment", "run_verify", "run_weaklimit_experiment",
]
