"""Entropy and product-form fairness measures, and the cross-route comparator.

Maximizing entropy ``-sum p_i ln p_i`` is the same as minimizing the weighted
product ``prod p_i ** p_i``, and by AM-GM that product is smallest exactly when
all ``p_i`` are equal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from . import closed_form, nbs, potential
from .errors import DomainError, NonpositiveUtility
from .model import SalaryGrid, effective_utility

__all__ = [
    "DistributionMetrics",
    "EquivalenceReport",
    "entropy",
    "weighted_product",
    "metrics",
    "sample_simplex",
    "amgm_property_check",
    "compare_methods",
    "entropy_decomposition",
    "total_variation",
]


def entropy(p, axis=-1):
    """Shannon entropy in nats along ``axis`` with 0 ln 0 = 0."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return -np.sum(terms, axis=axis)


def weighted_product(p, axis=-1):
    """prod_i p_i ** p_i with 0 ** 0 = 1, evaluated as a literal product."""
    p = np.asarray(p, dtype=float)
    return np.prod(np.power(p, p), axis=axis)


def total_variation(p, q) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))))


@dataclass(frozen=True)
class DistributionMetrics:
    entropy: float
    weighted_product: float
    uniform_gap: float


def _check_distribution(p):
    p = np.asarray(p, dtype=float).ravel()
    if p.size < 1 or not np.all(np.isfinite(p)) or np.any(p < 0):
        raise DomainError("probabilities must be finite and non-negative")
    if abs(p.sum() - 1.0) > 1e-9:
        raise DomainError(f"probabilities sum to {p.sum()!r}, not 1")
    return p


def metrics(p) -> DistributionMetrics:
    p = _check_distribution(p)
    h = float(entropy(p))
    return DistributionMetrics(h, float(weighted_product(p)), max(math.log(p.size) - h, 0.0))


def sample_simplex(rng, n, size):
    """Uniform draws from the (n-1)-simplex via normalized exponentials."""
    e = rng.exponential(size=(size, n))
    return e / e.sum(axis=1, keepdims=True)


def amgm_property_check(n, samples, seed) -> int:
    """Count random simplex points that break ``prod p_i**p_i >= 1/n`` or that
    attain the bound without being uniform. Expected to return 0."""
    if n < 2 or samples < 1:
        raise ValueError("need n >= 2 and samples >= 1")
    p = sample_simplex(np.random.default_rng(seed), n, samples)
    wp = weighted_product(p)
    floor = 1.0 / n
    below = wp < floor * (1 - 1e-12)
    # wp - 1/n grows like the squared distance to uniform; a tie this close
    # must come from a point within ~1e-5 of the centre
    tie = np.abs(wp - floor) <= 1e-12 * floor
    off_centre = np.max(np.abs(p - floor), axis=1) > 1e-5
    return int(np.count_nonzero(below | (tie & off_centre)))


@dataclass(frozen=True)
class EquivalenceReport:
    gaps: Dict[str, float]
    utility_spread: Dict[str, float]
    tolerance: float
    passed: bool
    failures: Dict[str, str] = field(default_factory=dict)

    def as_dict(self):
        return {
            "gaps": dict(self.gaps),
            "utility_spread": dict(self.utility_spread),
            "tolerance": self.tolerance,
            "pass": self.passed,
            "failures": dict(self.failures),
        }


def _spread(grid, counts, params):
    occupied = counts > 0
    h = np.atleast_1d(effective_utility(grid.levels[occupied], counts[occupied], params))
    return float(h.max() - h.min())


def compare_fractions(solutions: Dict[str, np.ndarray], tolerance, spreads=None, failures=None):
    """Pairwise sup-norm gaps between named fraction vectors."""
    names = list(solutions)
    gaps = {}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            gaps[f"{a}_vs_{b}"] = float(np.max(np.abs(solutions[a] - solutions[b])))
    failures = dict(failures or {})
    passed = not failures and all(v <= tolerance for v in gaps.values())
    return EquivalenceReport(gaps, dict(spreads or {}), tolerance, passed, failures)


def compare_methods(grid: SalaryGrid, params, n_total, tolerance=1e-7, fixed_point_tol=1e-10) -> EquivalenceReport:
    """Solve by partition function, potential ascent and bargaining, and
    compare the resulting fraction vectors against each other."""
    solutions, spreads, failures = {}, {}, {}
    closed = closed_form.equilibrium_occupancy(grid, params, n_total)
    solutions["closed_form"] = closed.fractions
    spreads["closed_form"] = _spread(grid, closed.counts, params)

    pot = potential.maximize_potential(grid, params, n_total, tol=fixed_point_tol)
    solutions["potential"] = pot.occupancy.fractions
    spreads["potential"] = _spread(grid, pot.occupancy.counts, params)

    try:
        sol = nbs.solve(grid, params, n_total)
    except NonpositiveUtility as exc:
        failures["nbs"] = f"NonpositiveUtility: {exc}"
    else:
        solutions["nbs"] = sol.occupancy.fractions
        spreads["nbs"] = _spread(grid, sol.occupancy.counts, params)
    return compare_fractions(solutions, tolerance, spreads, failures)


def entropy_decomposition(grid: SalaryGrid, params, n_total):
    """(entropy of x*, phi_w(x*)/gamma, |difference|) at the equilibrium."""
    x = closed_form.equilibrium_occupancy(grid, params, n_total).fractions
    h = float(entropy(x))
    phi_w = potential.potential_value(x, grid, params, n_total).phi_w / params.gamma
    return h, phi_w, abs(h - phi_w)
