"""Experiment harness: synthetic data, metrics, runner, and CLI."""

from .experiment import ExperimentConfig, run_experiment, run_sweep, summarize_results
from .io import load_dataset, save_dataset
from .metrics import MetricsReport, mnlp, rmse
from .synthetic import generate_synthetic

__all__ = [
    "ExperimentConfig",
    "MetricsReport",
    "generate_synthetic",
    "load_dataset",
    "mnlp",
    "rmse",
    "run_experiment",
    "run_sweep",
    "save_dataset",
    "summarize_results",
]
