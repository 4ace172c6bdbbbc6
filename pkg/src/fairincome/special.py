"""Principal branch of the Lambert-W function.

Halley's iteration from a piecewise starting guess:

* near the branch point (x < -0.3) the equation is rewritten in t = w + 1
  against q = x + 1/e, with 1/e carried in two parts so that q is exact;
  this keeps W well-conditioned and monotone right up to x = -1/e,
* ``log(x) - log(log(x))`` for x > e,
* a rational guess elsewhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = ["WResult", "lambert_w0", "lambert_w0_array", "lambert_w0_of_exp", "BRANCH_POINT"]

BRANCH_POINT = -math.exp(-1.0)
# 1/e = _INV_E_HI + _INV_E_LO to ~32 significant digits
_INV_E_HI = 0.36787944117144233
_INV_E_LO = -1.2428753672788363e-17
_EPS = float(np.finfo(float).eps)
_NEAR = -0.3
MAX_ITER = 50


@dataclass(frozen=True)
class WResult:
    value: float
    residual: float
    iterations: int


def _g(t):
    """(t - 1) e^t + 1, accurate for small |t|."""
    small = np.abs(t) < 0.1
    out = (t - 1.0) * np.expm1(t) + t
    if small.any():
        ts = t[small]
        # sum_{k>=2} (k-1) t^k / k!, Horner from k = 14 down
        acc = np.zeros_like(ts)
        for k in range(14, 1, -1):
            acc = acc * ts + (k - 1) / math.factorial(k)
        out[small] = acc * ts * ts
    return out


def _solve_near(x):
    """W0 for -1/e <= x < -0.3 via t = W + 1."""
    q = (x + _INV_E_HI) + _INV_E_LO  # first sum is exact (Sterbenz)
    q = np.maximum(q, 0.0)
    target = math.e * q
    p = np.sqrt(2.0 * target)
    t = p - p * p / 3.0 + 11.0 / 72.0 * p ** 3 - 43.0 / 540.0 * p ** 4
    iters = np.zeros(x.shape, dtype=int)
    active = target > 0
    t[~active] = 0.0
    for _ in range(MAX_ITER):
        if not active.any():
            break
        ta = t[active]
        et = np.exp(ta)
        f = _g(ta) - target[active]
        d1 = ta * et
        d2 = et * (1.0 + ta)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = 2.0 * f * d1 / (2.0 * d1 * d1 - f * d2)
        step = np.where(np.isfinite(step), step, 0.0)
        t_new = np.maximum(ta - step, 0.0)
        iters[active] += 1
        done = (np.abs(t_new - ta) <= 4 * _EPS * np.abs(t_new)) | (
            np.abs(f) <= 4 * _EPS * np.maximum(target[active], ta)
        )
        t[active] = t_new
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    return t - 1.0, iters


def _solve_far(x):
    """W0 for x >= -0.3 by Halley on w e^w - x."""
    w = np.empty_like(x)
    big = x > math.e
    mid = ~big
    if big.any():
        lx = np.log(x[big])
        w[big] = lx - np.log(lx)
    if mid.any():
        xm = x[mid]
        w[mid] = xm * (1.0 + 4.0 / 3.0 * xm) / (1.0 + 7.0 / 3.0 * xm + 5.0 / 6.0 * xm * xm)
    iters = np.zeros(x.shape, dtype=int)
    active = x != 0.0
    w[~active] = 0.0
    for _ in range(MAX_ITER):
        if not active.any():
            break
        wa = w[active]
        xa = x[active]
        ew = np.exp(wa)
        f = wa * ew - xa
        wp1 = wa + 1.0
        step = f / (ew * wp1 - (wa + 2.0) * f / (2.0 * wp1))
        w_new = wa - step
        iters[active] += 1
        done = (np.abs(w_new - wa) <= 4 * _EPS * np.maximum(1.0, np.abs(w_new))) | (
            np.abs(f) <= 2 * _EPS * np.abs(xa)
        )
        w[active] = w_new
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    return w, iters


def lambert_w0_array(x):
    """Vectorized W0. Returns ``(w, residual, iterations)`` arrays."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.isnan(x)) or np.any(np.isinf(x)):
        raise DomainError("Lambert W argument must be finite")
    # the double nearest -1/e lies just below it; it is accepted and maps to -1
    below = x < BRANCH_POINT
    if below.any():
        raise DomainError(f"W0 is undefined below -1/e; got {x[below][0]!r}")

    w = np.empty_like(x)
    iters = np.zeros(x.shape, dtype=int)
    near = x < _NEAR
    if near.any():
        w[near], iters[near] = _solve_near(x[near])
    if (~near).any():
        w[~near], iters[~near] = _solve_far(x[~near])
    residual = np.abs(w * np.exp(w) - x)
    return w, residual, iters


def lambert_w0(x) -> WResult:
    """Principal-branch W(x) for a real scalar x >= -1/e."""
    w, res, it = lambert_w0_array(np.array([float(x)]))
    return WResult(float(w[0]), float(res[0]), int(it[0]))


def lambert_w0_of_exp(log_x: float) -> float:
    """W0(exp(log_x)) without forming exp(log_x); usable when it overflows."""
    if log_x < 700.0:
        return lambert_w0(math.exp(log_x)).value
    # w + ln w = log_x, Newton from the asymptotic guess
    w = log_x - math.log(log_x)
    for _ in range(MAX_ITER):
        step = (w + math.log(w) - log_x) / (1.0 + 1.0 / w)
        w -= step
        if abs(step) <= 4 * _EPS * w:
            break
    return w
