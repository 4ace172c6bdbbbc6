"""Equilibrium distribution from the partition function.

At equilibrium every occupied level yields the same effective utility, which
forces ``N_i = N exp(h0_i / gamma) / Z`` with ``Z = sum_j exp(h0_j / gamma)``.
This is the loop-free reference the iterative and bargaining routes are
checked against.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import Occupancy, SalaryGrid, base_utility_from_log, effective_utility
from .errors import DomainError

__all__ = [
    "EquilibriumReport",
    "log_partition_function",
    "partition_function",
    "equilibrium_occupancy",
    "equilibrium_utility",
    "lognormal_fractions",
    "report",
]

_LOG_MAX = math.log(sys.float_info.max)


def _log_sum_exp(a: np.ndarray) -> float:
    top = float(np.max(a))
    if not math.isfinite(top):
        raise OverflowError("non-finite exponent in partition function")
    return top + math.log(float(np.sum(np.exp(a - top))))


def log_partition_from_base(h0, gamma) -> float:
    return _log_sum_exp(np.asarray(h0, dtype=float) / gamma)


def fractions_from_base(h0, gamma) -> np.ndarray:
    """Softmax of h0 / gamma, with the max subtracted before exponentiating."""
    a = np.asarray(h0, dtype=float) / gamma
    e = np.exp(a - np.max(a))
    return e / e.sum()


def log_partition_function(grid: SalaryGrid, params) -> float:
    return log_partition_from_base(base_utility_from_log(grid.log_levels, params), params.gamma)


def partition_function(grid: SalaryGrid, params) -> float:
    """Z = sum_i exp(h0_i / gamma).

    Raises OverflowError if Z itself is not representable even though the
    shifted sum was computed safely.
    """
    log_z = log_partition_function(grid, params)
    if log_z >= _LOG_MAX:
        raise OverflowError(f"partition function exp({log_z:.6g}) overflows a double")
    return math.exp(log_z)


def equilibrium_occupancy(grid: SalaryGrid, params, n_total) -> Occupancy:
    n_total = float(n_total)
    if not (n_total > 0 and math.isfinite(n_total)):
        raise DomainError(f"total population must be positive, got {n_total!r}")
    x = fractions_from_base(base_utility_from_log(grid.log_levels, params), params.gamma)
    return Occupancy(n_total * x, n_total)


def equilibrium_utility(z, n_total, params) -> float:
    """Common effective utility h* = gamma (ln Z - ln N)."""
    if not (z > 0 and n_total > 0):
        raise DomainError("partition function and population must be positive")
    return params.gamma * (math.log(z) - math.log(n_total))


def lognormal_fractions(grid: SalaryGrid, params, n_total, multiplier) -> np.ndarray:
    """Fractions from the explicit lognormal density on the grid.

    x_i = exp(-(ln S_i - m)^2 / (gamma/beta)) / (S_i D) with
    m = (alpha+gamma)/(2 beta) and D = N exp(lam/gamma - (alpha+gamma)^2/(4 beta gamma)),
    where ``multiplier`` is the Lagrange multiplier lam of the simplex
    constraint. Evaluated in log space; matches the softmax only when
    ``multiplier`` equals h*.
    """
    a, b, g = params.alpha, params.beta, params.gamma
    log_s = grid.log_levels
    m = (a + g) / (2.0 * b)
    log_d = math.log(n_total) + multiplier / g - (a + g) ** 2 / (4.0 * b * g)
    return np.exp(-((log_s - m) ** 2) / (g / b) - log_s - log_d)


@dataclass(frozen=True)
class EquilibriumReport:
    occupancy: Occupancy
    h_star: float
    z: float
    lam: float
    m_total: float
    h_total: float
    lognormal_mu: float
    lognormal_sigma_sq: float
    mu: Optional[float] = None

    def level_utilities(self, grid: SalaryGrid, params) -> np.ndarray:
        return np.asarray(effective_utility(grid.levels, self.occupancy.counts, params))

    def as_dict(self):
        return {
            "counts": self.occupancy.counts.tolist(),
            "fractions": self.occupancy.fractions.tolist(),
            "n_total": self.occupancy.total,
            "h_star": self.h_star,
            "z": self.z,
            "lambda": self.lam,
            "mu": self.mu,
            "m_total": self.m_total,
            "h_total": self.h_total,
            "lognormal_mu": self.lognormal_mu,
            "lognormal_sigma_sq": self.lognormal_sigma_sq,
        }


def report(grid: SalaryGrid, params, n_total) -> EquilibriumReport:
    n_total = float(n_total)
    z = partition_function(grid, params)
    occ = equilibrium_occupancy(grid, params, n_total)
    h_star = equilibrium_utility(z, n_total, params)
    return EquilibriumReport(
        occupancy=occ,
        h_star=h_star,
        z=z,
        lam=h_star,
        m_total=math.fsum(occ.counts * grid.levels),
        h_total=n_total * h_star,
        lognormal_mu=(params.alpha + params.gamma) / (2.0 * params.beta),
        lognormal_sigma_sq=params.gamma / (2.0 * params.beta),
    )
