"""Explicit splitting integrators for stochastic Lie-Poisson systems."""

from ._spi import (
    ContractError,
    DomainError,
    Model,
    NumericError,
    SolverError,
    ap_sweep,
    convergence,
    fit_rate,
    integrate,
    model,
    model_from_json,
    ou_update,
    run_cli,
    step,
)

__all__ = [
    "ContractError",
    "DomainError",
    "Model",
    "NumericError",
    "SolverError",
    "ap_sweep",
    "convergence",
    "fit_rate",
    "integrate",
    "model",
    "model_from_json",
    "ou_update",
    "run_cli",
    "step",
]
