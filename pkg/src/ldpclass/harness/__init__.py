"""Experiment orchestration, file formats and the command-line interface."""

from .experiment import (
    ExperimentConfig,
    RateFit,
    RateRow,
    RateTable,
    ReplicationResult,
    fit_rate,
    run_rate_experiment,
    run_replication,
)

__all__ = [
    "ExperimentConfig",
    "RateFit",
    "RateRow",
    "RateTable",
    "ReplicationResult",
    "fit_rate",
    "run_rate_experiment",
    "run_replication",
]
