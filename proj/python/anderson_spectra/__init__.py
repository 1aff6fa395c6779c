"""Spectral statistics of the one-dimensional Anderson model."""

import json

from ._core import (
    ConfigError,
    ConvergenceError,
    SiteDistribution,
    char_poly_value,
    cli,
    count_in_interval,
    eigenpairs,
    estimate_ids,
    full_spectrum,
    log_norm,
    lyapunov_exponent,
    run_experiment,
    sample_potential,
    sturm_count,
)

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "SiteDistribution",
    "char_poly_value",
    "cli",
    "count_in_interval",
    "eigenpairs",
    "estimate_ids",
    "full_spectrum",
    "log_norm",
    "lyapunov_exponent",
    "run",
    "run_experiment",
    "sample_potential",
    "sturm_count",
]


def run(subcommand, config="", workers=1):
    """Runs an experiment and returns (summary dict, {table name: CSV text})."""
    summary, tables = run_experiment(subcommand, config, workers)
    return json.loads(summary), tables
