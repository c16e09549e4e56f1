"""Streaming time-varying Gaussian graphical model tracking."""

from ._core import (
    ConfigError,
    DimensionError,
    DivergenceError,
    Error,
    NotPositiveDefiniteError,
    build_scenario,
    dup_transpose_apply,
    ggm_cost,
    ggm_gradient,
    hessian_apply,
    logdet_spd,
    min_eigenvalue,
    mle_closed_form,
    nmse,
    project_spd,
    run_experiment,
    spd_inverse,
    unvech,
    vech,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "DivergenceError",
    "Error",
    "NotPositiveDefiniteError",
    "build_scenario",
    "dup_transpose_apply",
    "ggm_cost",
    "ggm_gradient",
    "hessian_apply",
    "logdet_spd",
    "min_eigenvalue",
    "mle_closed_form",
    "nmse",
    "project_spd",
    "run_experiment",
    "spd_inverse",
    "unvech",
    "vech",
]
