"""Nash bargaining over the salary levels.

With a zero disagreement point the Nash product over all N players groups by
level into ``prod_i h_i ** N_i``; taking logs gives the program

    maximize  g(N) = sum_i N_i ln h_i(N_i)   subject to  sum_i N_i <= N

with ``h_i(N_i) = h0_i - gamma ln N_i``. Stationarity reads
``ln h_i - gamma / h_i = mu`` for every level, whose unique solution is
``h_i = gamma / W0(gamma exp(-mu))``: every level gets the same utility.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .closed_form import log_partition_from_base
from .errors import DomainError, NonBindingConstraint, NonpositiveUtility
from .model import Occupancy, SalaryGrid, base_utility_from_log
from .special import lambert_w0_of_exp

__all__ = [
    "NbsSolution",
    "ConvexityWitnessReport",
    "AxiomProbeReport",
    "log_nash_product",
    "h_from_mu",
    "mu_from_h",
    "solve",
    "combine_occupancies",
    "convexity_witness",
    "axiom_probes",
]

ROUND_TRIP_TOL = 1e-10
_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class NbsSolution:
    """Bargaining outcome. ``binding`` is True when the KKT multiplier of the
    population constraint is strictly positive, which certifies that the
    constraint is active at the optimum of the inequality-constrained program."""

    occupancy: Occupancy
    h_star: float
    mu: float
    log_nash_product: float
    binding: bool

    def as_dict(self):
        return {
            "counts": self.occupancy.counts.tolist(),
            "fractions": self.occupancy.fractions.tolist(),
            "n_total": self.occupancy.total,
            "h_star": self.h_star,
            "mu": self.mu,
            "log_nash_product": self.log_nash_product,
            "binding": self.binding,
        }


def log_nash_product(occupancy, utilities) -> float:
    """sum_i N_i ln h_i, the log of the level-grouped Nash product."""
    counts = occupancy.counts if isinstance(occupancy, Occupancy) else np.asarray(occupancy, dtype=float)
    h = np.asarray(utilities, dtype=float).ravel()
    counts = np.asarray(counts, dtype=float).ravel()
    if counts.size != h.size:
        raise DomainError("occupancy and utilities differ in length")
    bad = np.flatnonzero(~(h > 0))
    if bad.size:
        i = int(bad[0])
        raise NonpositiveUtility(f"utility at level {i} is {h[i]!r}, not above the zero threat point", level=i)
    return math.fsum(counts * np.log(h))


def mu_from_h(h, params) -> float:
    return math.log(h) - params.gamma / h


def h_from_mu(mu, params) -> float:
    """Common utility solving ln h - gamma/h = mu, i.e. gamma / W0(gamma e^-mu)."""
    g = params.gamma
    w = lambert_w0_of_exp(math.log(g) - mu)
    assert w > 0, "W0 of a positive argument is positive"
    return g / w


def _solve_base(h0, gamma, n_total, params):
    h0 = np.asarray(h0, dtype=float)
    log_z = log_partition_from_base(h0, gamma)
    h_star = gamma * (log_z - math.log(n_total))
    # below this h* is rounding noise around zero
    floor = 8 * _EPS * gamma * max(1.0, abs(log_z))
    if not h_star > floor:
        raise NonpositiveUtility(
            f"equilibrium utility {h_star!r} does not exceed the zero disagreement point; "
            "raise salaries or gamma, or lower N"
        )
    mu = mu_from_h(h_star, params)
    h_back = h_from_mu(mu, params)
    if abs(h_back - h_star) > ROUND_TRIP_TOL * h_star:
        raise ArithmeticError(f"Lambert-W inversion gave {h_back!r}, expected {h_star!r}")
    # every level holds the population that brings its utility down to h*
    counts = np.exp((h0 - h_star) / gamma)
    utilities = h0 - gamma * np.log(counts)
    return counts, h_star, mu, log_nash_product(counts, utilities)


def solve(grid: SalaryGrid, params, n_total, require_binding=False) -> NbsSolution:
    """Solve the bargaining program.

    Raises NonpositiveUtility when h* <= 0. With ``require_binding`` a
    non-positive multiplier raises NonBindingConstraint instead of being
    reported through ``binding=False``.
    """
    n_total = float(n_total)
    if not (n_total > 0 and math.isfinite(n_total)):
        raise DomainError(f"total population must be positive, got {n_total!r}")
    h0 = base_utility_from_log(grid.log_levels, params)
    counts, h_star, mu, lnp = _solve_base(h0, params.gamma, n_total, params)
    if require_binding and not mu > 0:
        raise NonBindingConstraint(
            f"KKT multiplier mu={mu!r} is not positive; the population constraint does not bind",
            mu,
        )
    return NbsSolution(Occupancy(counts, n_total), h_star, mu, lnp, mu > 0)


def combine_occupancies(n1, n2, t):
    """Occupancy whose utilities are the t-mix of those of n1 and n2.

    Equals exp(t ln n1 + (1-t) ln n2); the power form keeps the endpoints exact.
    """
    n1 = np.asarray(n1, dtype=float)
    n2 = np.asarray(n2, dtype=float)
    t = np.asarray(t, dtype=float)
    return n1 ** t * n2 ** (1.0 - t)


@dataclass(frozen=True)
class ConvexityWitnessReport:
    samples: int
    max_combined_total: float
    violations: int
    max_identity_error: float = 0.0


def _random_population_points(rng, n, cap, size):
    totals = rng.integers(n, cap, size=size, endpoint=True)
    shares = rng.exponential(size=(size, n))
    shares /= shares.sum(axis=1, keepdims=True)
    return 1 + rng.multinomial(totals - n, shares)


def convexity_witness(grid: SalaryGrid, params, n_total, samples, seed) -> ConvexityWitnessReport:
    """Sample pairs of integer occupancies and check that the occupancy behind
    every convex mix of their utility vectors stays within the population."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    cap = math.floor(n_total)
    n = grid.n
    if cap < n:
        raise ValueError(f"need N >= {n} to place at least one agent per level")
    rng = np.random.default_rng(seed)
    n1 = _random_population_points(rng, n, cap, samples)
    n2 = _random_population_points(rng, n, cap, samples)
    t = rng.random((samples, 1))
    n3 = combine_occupancies(n1, n2, t)
    totals = n3.sum(axis=1)
    violations = int(np.count_nonzero(totals > n_total * (1 + 1e-12)))

    h0 = base_utility_from_log(grid.log_levels, params)
    g = params.gamma
    h_mix = t * (h0 - g * np.log(n1)) + (1 - t) * (h0 - g * np.log(n2))
    h3 = h0 - g * np.log(n3)
    identity_error = float(np.max(np.abs(h_mix - h3)))
    return ConvexityWitnessReport(samples, float(totals.max()), violations, identity_error)


@dataclass(frozen=True)
class AxiomProbeReport:
    symmetry_gap: float
    permutation_gap: float
    shift_occupancy_gap: float
    shift_h_star_error: float
    shift: float

    def passed(self, tol=1e-10) -> bool:
        return max(self.symmetry_gap, self.permutation_gap, self.shift_occupancy_gap,
                   self.shift_h_star_error) <= tol


def axiom_probes(grid: SalaryGrid, params, n_total, shift=1.0, duplicate_level=0) -> AxiomProbeReport:
    """Spot checks of the symmetry axiom and of invariance under a common shift
    of every level's base utility."""
    g = params.gamma
    n_total = float(n_total)
    h0 = base_utility_from_log(grid.log_levels, params)
    counts, h_star, _, _ = _solve_base(h0, g, n_total, params)

    # a copy of one level: the two copies must split equally
    k = duplicate_level
    dup = np.append(h0, h0[k])
    dup_counts = _solve_base(dup, g, n_total, params)[0]
    symmetry_gap = abs(dup_counts[k] - dup_counts[-1]) / n_total

    perm = np.random.default_rng(0).permutation(h0.size)
    perm_counts = _solve_base(h0[perm], g, n_total, params)[0]
    permutation_gap = float(np.max(np.abs(perm_counts - counts[perm]))) / n_total

    shifted_counts, shifted_h, _, _ = _solve_base(h0 + shift, g, n_total, params)
    return AxiomProbeReport(
        symmetry_gap=float(symmetry_gap),
        permutation_gap=permutation_gap,
        shift_occupancy_gap=float(np.max(np.abs(shifted_counts - counts))) / n_total,
        shift_h_star_error=abs(shifted_h - (h_star + shift)),
        shift=shift,
    )
