"""Preference constants, salary grids and the per-level utility functions.

Every solver in the package evaluates utilities through :func:`base_utility`
and :func:`effective_utility`, so the three equilibrium routes share a single
definition of the game.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidGrid, InvalidParameter

__all__ = [
    "ModelParams",
    "SalaryGrid",
    "Occupancy",
    "validate_params",
    "build_salary_grid",
    "base_utility",
    "effective_utility",
]


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModelParams:
    """Weights of salary utility (alpha), effort disutility (beta) and
    competition disutility (gamma). All three must be strictly positive."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        validate_params(self)

    def as_dict(self):
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma}


def validate_params(params) -> None:
    for name in ("alpha", "beta", "gamma"):
        value = getattr(params, name)
        try:
            ok = math.isfinite(value) and value > 0
        except TypeError:
            ok = False
        if not ok:
            raise InvalidParameter(name, value)


@dataclass(frozen=True)
class SalaryGrid:
    """The n predetermined salary levels, strictly increasing."""

    levels: np.ndarray
    log_levels: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float).ravel()
        if levels.size < 1:
            raise InvalidGrid("a salary grid needs at least one level")
        if not np.all(np.isfinite(levels)) or np.any(levels <= 0):
            raise InvalidGrid("salary levels must be finite and strictly positive")
        if np.any(np.diff(levels) <= 0):
            raise InvalidGrid("salary levels must be strictly increasing")
        object.__setattr__(self, "levels", _frozen(levels))
        object.__setattr__(self, "log_levels", _frozen(np.log(levels)))

    @classmethod
    def from_log_levels(cls, log_levels):
        return cls(np.exp(np.asarray(log_levels, dtype=float)))

    @property
    def n(self) -> int:
        return int(self.levels.size)

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, SalaryGrid):
            return NotImplemented
        return np.array_equal(self.levels, other.levels)

    def __hash__(self):
        return hash(self.levels.tobytes())


@dataclass(frozen=True)
class Occupancy:
    """Population per level. Counts are non-negative reals; ``total`` is N."""

    counts: np.ndarray
    total: float

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=float).ravel()
        total = float(self.total)
        if not (math.isfinite(total) and total > 0):
            raise DomainError(f"total population must be positive, got {total!r}")
        if not np.all(np.isfinite(counts)) or np.any(counts < 0):
            raise DomainError("occupancy counts must be finite and non-negative")
        if counts.sum() > total * (1 + 1e-9):
            raise DomainError(
                f"occupancy counts sum to {counts.sum()!r}, exceeding total {total!r}"
            )
        object.__setattr__(self, "counts", _frozen(counts))
        object.__setattr__(self, "total", total)

    @classmethod
    def from_fractions(cls, fractions, total):
        return cls(np.asarray(fractions, dtype=float) * float(total), total)

    @property
    def fractions(self) -> np.ndarray:
        return self.counts / self.total

    @property
    def n(self) -> int:
        return int(self.counts.size)


def build_salary_grid(min_salary, max_salary, n) -> SalaryGrid:
    """n levels spaced evenly in log-salary between the endpoints, inclusive."""
    try:
        lo, hi = float(min_salary), float(max_salary)
    except (TypeError, ValueError) as exc:
        raise InvalidGrid(f"salary endpoints must be numbers: {exc}") from None
    if isinstance(n, bool) or int(n) != n:
        raise InvalidGrid(f"number of levels must be an integer, got {n!r}")
    n = int(n)
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo <= 0:
        raise InvalidGrid("salary endpoints must be finite and positive")
    if lo > hi:
        raise InvalidGrid(f"min_salary {lo} exceeds max_salary {hi}")
    if n < 1:
        raise InvalidGrid("need at least one level")
    if n == 1:
        if lo != hi:
            raise InvalidGrid("a single-level grid requires min_salary == max_salary")
        return SalaryGrid(np.array([lo]))
    if lo == hi:
        raise InvalidGrid("n > 1 levels require min_salary < max_salary")
    return SalaryGrid(np.geomspace(lo, hi, n))


def base_utility(s, params):
    """Occupancy-independent utility alpha*ln(s) - beta*ln(s)**2 of a salary.

    Accepts a scalar or an array of salaries.
    """
    s_arr = np.asarray(s, dtype=float)
    if np.any(~(s_arr > 0)):
        raise DomainError("salary must be strictly positive")
    log_s = np.log(s_arr)
    out = params.alpha * log_s - params.beta * log_s * log_s
    return float(out) if out.ndim == 0 else out


def base_utility_from_log(log_s, params):
    log_s = np.asarray(log_s, dtype=float)
    return params.alpha * log_s - params.beta * log_s * log_s


def effective_utility(s, n_occ, params):
    """Utility of a job at salary ``s`` shared with ``n_occ`` agents in total."""
    n_arr = np.asarray(n_occ, dtype=float)
    if np.any(~(n_arr > 0)):
        raise DomainError("occupancy must be strictly positive to evaluate its utility")
    out = np.asarray(base_utility(s, params)) - params.gamma * np.log(n_arr)
    return float(out) if out.ndim == 0 else out


def level_utilities(grid: SalaryGrid, counts, params) -> np.ndarray:
    """Effective utility of every level of ``grid`` at the given counts."""
    return np.asarray(effective_utility(grid.levels, np.asarray(counts, dtype=float), params))
