"""System-identification benchmark: config, Monte Carlo harness, CLI."""

from .config import ExperimentConfig, SupportWindow, load_config
from .harness import TrialResult, aggregate_and_emit, generate_system, run_experiment, run_trial, summarize

__all__ = ["ExperimentConfig", "SupportWindow", "load_config", "TrialResult", "aggregate_and_emit",
           "generate_system", "run_experiment", "run_trial", "summarize"]
