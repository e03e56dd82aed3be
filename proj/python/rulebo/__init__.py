"""Bayesian optimization with training-curve diagnosis and rule-based
search-space tuning. Thin re-export of the compiled core."""

from ._core import (
    ConfigError,
    GaussianProcess,
    RuleboError,
    decode,
    diagnose,
    encode,
    expected_improvement,
    load_checkpoint,
    oscillation_score,
    propose_next,
    run_experiment,
    run_external_trainee,
    sample_random,
    save_checkpoint,
    start,
    step,
    synthetic_curves,
    tune,
)

__all__ = [
    "ConfigError",
    "GaussianProcess",
    "RuleboError",
    "decode",
    "diagnose",
    "encode",
    "expected_improvement",
    "load_checkpoint",
    "oscillation_score",
    "propose_next",
    "run_experiment",
    "run_external_trainee",
    "sample_random",
    "save_checkpoint",
    "start",
    "step",
    "synthetic_curves",
    "tune",
]
