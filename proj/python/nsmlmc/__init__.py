"""Multilevel MCMC for Navier-Stokes inversion from Lagrangian tracer data."""

from ._core import (
    __version__,
    Config,
    dof_cost,
    estimate,
    fe_forward,
    load_config,
    posterior_expectation,
    reference_posterior,
    schedule,
    spectral_forward,
    spectral_taylor_green,
)

__all__ = [
    "Config",
    "dof_cost",
    "estimate",
    "fe_forward",
    "load_config",
    "posterior_expectation",
    "reference_posterior",
    "schedule",
    "spectral_forward",
    "spectral_taylor_green",
]
