"""Agent-based job switching.

Agents revise one at a time. A revising agent scores every level j by the
utility it would get after moving there, ``h0_j - gamma ln(N_j + [j != current])``,
counting itself at the destination, then either moves to a best level
(``best_response``) or samples a level with probability proportional to
``exp(score / temperature)`` (``logit``).

Best-response revision climbs the exact potential
``sum_i N_i h0_i - gamma sum_i ln N_i!`` by exactly the mover's gain, so it
never decreases it. Logit revision samples the Gibbs measure
``exp(potential / temperature)`` over agent profiles; after counting the
``N! / prod N_i!`` profiles behind each count vector, its mean-field rest
point is ``x_i ~ exp(h0_i / (gamma + temperature))`` rather than the
equilibrium ``exp(h0_i / gamma)``. See :func:`logit_rest_point`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np

from .closed_form import fractions_from_base
from .errors import InsufficientData, InvalidPlacement
from .model import Occupancy, SalaryGrid, base_utility_from_log

__all__ = [
    "SimState",
    "SimulationTrace",
    "PROTOCOLS",
    "init_population",
    "step_once",
    "run",
    "empirical_distribution",
    "is_rest_point",
    "granularity_bound",
    "logit_rest_point",
    "exact_potential",
]

PROTOCOLS = ("best_response", "logit")
PLACEMENTS = ("uniform", "all_at_lowest", "custom")
# candidates within this of the best score count as tied
TIE_TOL = 1e-12


@dataclass
class SimState:
    assignments: np.ndarray
    counts: np.ndarray
    step: int
    rng_seed: Optional[int]
    rng: np.random.Generator = field(repr=False)

    @property
    def n_agents(self) -> int:
        return int(self.assignments.size)

    def check_invariants(self):
        hist = np.bincount(self.assignments, minlength=self.counts.size)
        assert np.array_equal(hist, self.counts), "counts out of sync with assignments"
        assert int(self.counts.sum()) == self.n_agents


@dataclass(frozen=True)
class SimulationTrace:
    steps: np.ndarray
    counts: np.ndarray
    utility_spread: np.ndarray
    seed: Optional[int]
    protocol: str
    temperature: float
    potential_violations: Optional[int] = None

    @property
    def n_agents(self) -> int:
        return int(self.counts[0].sum()) if len(self.counts) else 0

    def summary(self, burn_in=0):
        out = {
            "protocol": self.protocol,
            "temperature": self.temperature,
            "seed": self.seed,
            "snapshots": int(len(self.steps)),
            "final_step": int(self.steps[-1]) if len(self.steps) else 0,
            "final_counts": self.counts[-1].tolist() if len(self.counts) else [],
            "final_utility_spread": float(self.utility_spread[-1]) if len(self.steps) else None,
            "potential_violations": self.potential_violations,
        }
        if len(self.steps) > burn_in:
            out["empirical_fractions"] = empirical_distribution(self, burn_in).tolist()
        return out


def init_population(grid: SalaryGrid, n_agents, placement="uniform", seed=None, counts=None) -> SimState:
    n = grid.n
    rng = np.random.default_rng(seed)
    if isinstance(placement, (list, tuple, np.ndarray)):
        counts, placement = placement, "custom"
    if n_agents < 1 or int(n_agents) != n_agents:
        raise InvalidPlacement(f"n_agents must be a positive integer, got {n_agents!r}")
    n_agents = int(n_agents)
    if placement == "uniform":
        base, extra = divmod(n_agents, n)
        c = np.full(n, base, dtype=np.int64)
        if extra:
            c[rng.choice(n, size=extra, replace=False)] += 1
    elif placement == "all_at_lowest":
        c = np.zeros(n, dtype=np.int64)
        c[0] = n_agents
    elif placement == "custom":
        if counts is None:
            raise InvalidPlacement("custom placement needs counts")
        c = np.asarray(counts)
        if c.shape != (n,) or np.any(c < 0) or np.any(c != np.round(c)):
            raise InvalidPlacement(f"custom counts must be {n} non-negative integers")
        c = c.astype(np.int64)
        if int(c.sum()) != n_agents:
            raise InvalidPlacement(f"custom counts sum to {int(c.sum())}, expected {n_agents}")
    else:
        raise InvalidPlacement(f"unknown placement {placement!r}; expected one of {PLACEMENTS}")
    assignments = np.repeat(np.arange(n, dtype=np.int64), c)
    return SimState(assignments, c.copy(), 0, seed, rng)


@numba.njit(cache=True)
def _exact_potential(counts, h0, gamma):
    total = 0.0
    for i in range(counts.size):
        total += counts[i] * h0[i] - gamma * math.lgamma(counts[i] + 1.0)
    return total


@numba.njit(cache=True)
def _advance(assign, counts, h0, gamma, logit, temperature, draws, check):
    """Apply one revision per row of ``draws``; returns potential decreases seen."""
    n = counts.size
    n_agents = assign.size
    cand = np.empty(n)
    violations = 0
    for s in range(draws.shape[0]):
        r = int(draws[s, 0] * n_agents)
        if r >= n_agents:
            r = n_agents - 1
        a = assign[r]
        best = -np.inf
        for j in range(n):
            occ = counts[j] + (0 if j == a else 1)
            cand[j] = h0[j] - gamma * math.log(occ)
            if cand[j] > best:
                best = cand[j]
        u = draws[s, 1]
        choice = a
        if logit:
            total = 0.0
            for j in range(n):
                cand[j] = math.exp((cand[j] - best) / temperature)
                total += cand[j]
            threshold = u * total
            acc = 0.0
            choice = n - 1
            for j in range(n):
                acc += cand[j]
                if acc > threshold:
                    choice = j
                    break
        else:
            cut = best - TIE_TOL * max(1.0, abs(best))
            k = 0
            for j in range(n):
                if cand[j] >= cut:
                    k += 1
            pick = int(u * k)
            if pick >= k:
                pick = k - 1
            for j in range(n):
                if cand[j] >= cut:
                    if pick == 0:
                        choice = j
                        break
                    pick -= 1
        if choice != a:
            before = _exact_potential(counts, h0, gamma) if check else 0.0
            counts[a] -= 1
            counts[choice] += 1
            assign[r] = choice
            if check:
                after = _exact_potential(counts, h0, gamma)
                if after < before - 1e-9 * max(1.0, abs(before)):
                    violations += 1
    return violations


def _protocol_flag(protocol):
    if protocol not in PROTOCOLS:
        raise ValueError(f"protocol must be one of {PROTOCOLS}, got {protocol!r}")
    return protocol == "logit"


def step_once(state: SimState, grid: SalaryGrid, params, protocol="best_response", temperature=1.0) -> SimState:
    """One asynchronous revision. Mutates and returns ``state``."""
    logit = _protocol_flag(protocol)
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    h0 = base_utility_from_log(grid.log_levels, params)
    draws = state.rng.random((1, 2))
    _advance(state.assignments, state.counts, h0, float(params.gamma), logit, float(temperature), draws, False)
    state.step += 1
    return state


def _occupied_spread(counts, h0, gamma):
    occ = counts > 0
    h = h0[occ] - gamma * np.log(counts[occ])
    return float(h.max() - h.min())


def run(
    state: SimState,
    grid: SalaryGrid,
    params,
    protocol="best_response",
    temperature=1.0,
    steps=1,
    snapshot_every=1,
    check_potential=False,
) -> SimulationTrace:
    """Run ``steps`` revisions, recording the initial state, every
    ``snapshot_every``-th step and the final step. ``check_potential`` counts
    steps that lower the exact potential (meaningful for best response)."""
    logit = _protocol_flag(protocol)
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if snapshot_every < 1:
        raise ValueError("snapshot_every must be at least 1")
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    h0 = base_utility_from_log(grid.log_levels, params)
    gamma = float(params.gamma)
    n_snap = 1 + steps // snapshot_every + (1 if steps % snapshot_every else 0)
    snap_steps = np.empty(n_snap, dtype=np.int64)
    snap_counts = np.empty((n_snap, grid.n), dtype=np.int64)
    spread = np.empty(n_snap)

    def record(k):
        snap_steps[k] = state.step
        snap_counts[k] = state.counts
        spread[k] = _occupied_spread(state.counts, h0, gamma)

    record(0)
    k = 1
    violations = 0
    done = 0
    while done < steps:
        chunk = min(snapshot_every, steps - done)
        draws = state.rng.random((chunk, 2))
        violations += _advance(state.assignments, state.counts, h0, gamma, logit,
                               float(temperature), draws, bool(check_potential))
        state.step += chunk
        done += chunk
        record(k)
        k += 1
    return SimulationTrace(
        steps=snap_steps,
        counts=snap_counts,
        utility_spread=spread,
        seed=state.rng_seed,
        protocol=protocol,
        temperature=float(temperature),
        potential_violations=violations if check_potential else None,
    )


def empirical_distribution(trace: SimulationTrace, burn_in=0) -> np.ndarray:
    """Time-averaged fractions over the snapshots after the first ``burn_in``."""
    if burn_in < 0 or burn_in >= len(trace.steps):
        raise InsufficientData(
            f"burn_in={burn_in} leaves no snapshots out of {len(trace.steps)}"
        )
    counts = trace.counts[burn_in:].astype(float)
    fractions = counts / counts.sum(axis=1, keepdims=True)
    return fractions.mean(axis=0)


def exact_potential(counts, grid: SalaryGrid, params) -> float:
    """N times the factorial-form potential, up to an additive constant."""
    h0 = base_utility_from_log(grid.log_levels, params)
    return float(_exact_potential(np.asarray(counts, dtype=np.int64), h0, float(params.gamma)))


def is_rest_point(counts, grid: SalaryGrid, params, tol=TIE_TOL) -> bool:
    """True when no agent can strictly gain by switching level."""
    counts = np.asarray(counts)
    h0 = base_utility_from_log(grid.log_levels, params)
    g = params.gamma
    stay = np.full(counts.size, -np.inf)
    occ = counts > 0
    stay[occ] = h0[occ] - g * np.log(counts[occ])
    move = h0 - g * np.log(counts + 1.0)
    for a in np.flatnonzero(occ):
        others = np.delete(move, a)
        if others.size and others.max() > stay[a] + tol * max(1.0, abs(stay[a])):
            return False
    return True


def granularity_bound(counts, gamma) -> float:
    """Largest one-agent utility step gamma ln((N_i+1)/N_i) over occupied levels."""
    counts = np.asarray(counts, dtype=float)
    occ = counts[counts > 0]
    return float(np.max(gamma * np.log1p(1.0 / occ)))


def logit_rest_point(grid: SalaryGrid, params, temperature) -> np.ndarray:
    """Mean-field rest point of logit revision, softmax(h0 / (gamma + T))."""
    h0 = base_utility_from_log(grid.log_levels, params)
    return fractions_from_base(h0, params.gamma + temperature)


def occupancy_of(state: SimState) -> Occupancy:
    return Occupancy(state.counts.astype(float), float(state.n_agents))
