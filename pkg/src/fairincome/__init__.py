"""Equilibrium income distribution of an ideal free-market job game, computed
three ways (partition function, potential maximization, Nash bargaining) and
cross-checked, plus entropy/fairness measures and an agent-based simulator."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    ModelParams,
    Occupancy,
    SalaryGrid,
    base_utility,
    build_salary_grid,
    effective_utility,
    validate_params,
)

__all__ = [
    "ModelParams",
    "Occupancy",
    "SalaryGrid",
    "base_utility",
    "build_salary_grid",
    "effective_utility",
    "validate_params",
    "__version__",
]
