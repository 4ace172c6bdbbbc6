"""Potential function of the job-choice game and its maximizer.

The potential is ``phi = phi_u + phi_v + phi_w`` with

    phi_u = alpha * sum x_i ln S_i
    phi_v = -beta * sum x_i (ln S_i)^2
    phi_w = (gamma / N) ln(N! / prod (N x_i)!)

and the additive constant fixed at zero. In ``"stirling"`` mode the factorials
are replaced by ``ln k! ~ k ln k - k`` with N held fixed, which gives

    phi_w = -gamma * sum x_i ln x_i + gamma (ln N - 1) (1 - sum x_i).

The second term vanishes on the simplex, so there phi_w / gamma is exactly the
entropy of x; off the simplex it makes d(phi)/d(x_i) equal the effective
utility h0_i - gamma ln(N x_i) with no leftover offset.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, NotConverged, NotIntegral
from .model import Occupancy, SalaryGrid, base_utility_from_log, effective_utility

__all__ = [
    "PotentialValue",
    "MaximizeResult",
    "potential_value",
    "potential_gradient",
    "concavity_diagnostic",
    "maximize_potential",
]

MODES = ("stirling", "exact_factorial")


@dataclass(frozen=True)
class PotentialValue:
    total: float
    phi_u: float
    phi_v: float
    phi_w: float
    mode: str


def _xlogx(x):
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return out


def _as_point(x, n, check_simplex):
    x = np.asarray(x, dtype=float).ravel()
    if x.size != n:
        raise DomainError(f"point has {x.size} entries, grid has {n} levels")
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise DomainError("population fractions must be finite and non-negative")
    if check_simplex and abs(x.sum() - 1.0) > 1e-9:
        raise DomainError(f"fractions sum to {x.sum()!r}, not 1")
    return x


def potential_value(x, grid: SalaryGrid, params, n_total, mode="stirling", check_simplex=True):
    """Evaluate phi at population fractions ``x``.

    ``check_simplex=False`` allows points off the simplex (the Stirling form
    extends smoothly there); finite-difference checks rely on it.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    x = _as_point(x, grid.n, check_simplex)
    n_total = float(n_total)
    log_s = grid.log_levels
    phi_u = params.alpha * float(np.dot(x, log_s))
    phi_v = -params.beta * float(np.dot(x, log_s * log_s))
    g = params.gamma
    if mode == "stirling":
        phi_w = -g * float(np.sum(_xlogx(x))) + g * (math.log(n_total) - 1.0) * (1.0 - float(x.sum()))
    else:
        counts = n_total * x
        rounded = np.round(counts)
        if abs(n_total - round(n_total)) > 1e-9 or np.any(np.abs(counts - rounded) > 1e-9):
            raise NotIntegral("exact_factorial mode needs integer N and integer N*x_i")
        log_multinomial = math.lgamma(round(n_total) + 1) - math.fsum(
            math.lgamma(k + 1) for k in rounded
        )
        phi_w = g / n_total * log_multinomial
    return PotentialValue(phi_u + phi_v + phi_w, phi_u, phi_v, phi_w, mode)


def potential_gradient(x, grid: SalaryGrid, params, n_total) -> np.ndarray:
    """d(phi)/d(x_i), which is the effective utility of level i at N x_i."""
    x = _as_point(x, grid.n, check_simplex=False)
    if np.any(x <= 0):
        raise DomainError("gradient is undefined on the simplex boundary")
    return np.atleast_1d(effective_utility(grid.levels, float(n_total) * x, params))


def concavity_diagnostic(x, params, n_total=None) -> np.ndarray:
    """Diagonal of the Hessian of phi, -gamma / x_i. The Hessian is diagonal."""
    x = np.asarray(x, dtype=float).ravel()
    if np.any(~(x > 0)):
        raise DomainError("Hessian is undefined on the simplex boundary")
    return -params.gamma / x


@dataclass(frozen=True)
class MaximizeResult:
    occupancy: Occupancy
    converged: bool
    iterations: int
    values: Optional[tuple] = field(default=None, repr=False)

    @property
    def fractions(self):
        return self.occupancy.fractions


def maximize_potential(
    grid: SalaryGrid,
    params,
    n_total,
    tol=1e-10,
    max_iters=10_000,
    start=None,
    step=0.5,
    raise_on_failure=True,
    record=False,
) -> MaximizeResult:
    """Maximize phi over the simplex by entropic mirror ascent.

    One ascent step with rate eta is ``x <- x * exp(eta * grad phi)``
    renormalized; in log space with ``step = eta * gamma`` this reads

        ln x <- (1 - step) ln x + step * h0 / gamma - const.

    ``step = 1`` jumps straight to the fixed point; ``0 < step < 1`` contracts
    the log-error by ``1 - step`` per iteration and increases phi monotonically.
    Stops when successive iterates differ by at most ``tol`` in sup-norm,
    measured on ln x (which bounds the change in x itself).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not 0 < step <= 1:
        raise ValueError("step must lie in (0, 1]")
    n_total = float(n_total)
    target = base_utility_from_log(grid.log_levels, params) / params.gamma
    if start is None:
        x = np.full(grid.n, 1.0 / grid.n)
    else:
        x = _as_point(start, grid.n, check_simplex=True)
        if np.any(x <= 0):
            raise DomainError("starting point must be interior")
        x = x / x.sum()
    log_x = np.log(x)
    values = [potential_value(x, grid, params, n_total).total] if record else None

    for it in range(1, max_iters + 1):
        prev = log_x
        log_x = (1.0 - step) * log_x + step * target
        top = log_x.max()
        log_x -= top + math.log(float(np.sum(np.exp(log_x - top))))
        x = np.exp(log_x)
        # |dx| <= |d ln x| on the simplex, so this also bounds the sup-norm
        # step in x; it keeps sparsely filled levels accurate as well
        gap = float(np.max(np.abs(log_x - prev)))
        if record:
            values.append(potential_value(x, grid, params, n_total).total)
        if gap <= tol:
            return MaximizeResult(
                Occupancy(n_total * x, n_total), True, it, tuple(values) if record else None
            )

    if raise_on_failure:
        raise NotConverged(
            f"mirror ascent did not reach tol={tol} in {max_iters} iterations", x, max_iters
        )
    return MaximizeResult(Occupancy(n_total * x, n_total), False, max_iters, tuple(values) if record else None)
