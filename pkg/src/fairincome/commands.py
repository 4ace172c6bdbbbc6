"""Implementations behind the ``solve``, ``simulate``, ``verify`` and ``sweep``
subcommands. Each returns a JSON-ready report dict."""
from __future__ import annotations

import math
import time
from dataclasses import replace

import numpy as np

from . import __version__
from . import closed_form, dynamics, fairness, nbs, potential
from .config import RunConfig
from .errors import (
    InvalidParameter,
    NonpositiveUtility,
    NotConverged,
    ValidationError,
)
from .model import ModelParams, effective_utility

__all__ = ["cmd_solve", "cmd_simulate", "cmd_verify", "cmd_sweep", "sweep_rows", "SWEEP_PARAMS"]

SWEEP_PARAMS = ("alpha", "beta", "gamma", "n_total")


def _envelope(command, cfg: RunConfig, results, started, extra=None):
    report = {
        "artifact": {"name": "fairincome", "version": __version__},
        "command": command,
        "config": cfg.to_dict(),
    }
    if extra:
        report.update(extra)
    report["results"] = results
    report["duration_seconds"] = time.perf_counter() - started
    return report


def _utilities(grid, counts, params):
    # empty levels have no defined utility; null keeps the JSON strict
    counts = np.asarray(counts, dtype=float)
    return [float(effective_utility(s, c, params)) if c > 0 else None for s, c in zip(grid.levels, counts)]


def _solve_results(cfg: RunConfig):
    grid, params, n_total = cfg.grid, cfg.params, cfg.n_total
    wanted = ("closed", "potential", "nbs") if cfg.method == "all" else (cfg.method,)
    results = {
        "grid": {"salaries": grid.levels.tolist(), "log_salaries": grid.log_levels.tolist()},
        "primary": wanted[0],
        "errors": {},
    }
    if "closed" in wanted:
        try:
            rep = closed_form.report(grid, params, n_total)
        except OverflowError as exc:
            results["errors"]["closed"] = f"OverflowError: {exc}"
        else:
            out = rep.as_dict()
            out["effective_utility"] = _utilities(grid, rep.occupancy.counts, params)
            out["entropy"] = float(fairness.entropy(rep.occupancy.fractions))
            results["closed"] = out
    if "potential" in wanted:
        try:
            res = potential.maximize_potential(
                grid, params, n_total, tol=cfg.tolerances["fixed_point"], max_iters=cfg.verify["max_iters"]
            )
        except NotConverged as exc:
            results["errors"]["potential"] = f"NotConverged: {exc}"
        else:
            occ = res.occupancy
            value = potential.potential_value(occ.fractions, grid, params, n_total)
            results["potential"] = {
                "counts": occ.counts.tolist(),
                "fractions": occ.fractions.tolist(),
                "n_total": occ.total,
                "iterations": res.iterations,
                "converged": res.converged,
                "phi": {"total": value.total, "phi_u": value.phi_u, "phi_v": value.phi_v, "phi_w": value.phi_w},
                "effective_utility": _utilities(grid, occ.counts, params),
            }
    if "nbs" in wanted:
        try:
            sol = nbs.solve(grid, params, n_total)
        except NonpositiveUtility as exc:
            results["errors"]["nbs"] = f"NonpositiveUtility: {exc}"
        else:
            out = sol.as_dict()
            out["effective_utility"] = _utilities(grid, sol.occupancy.counts, params)
            results["nbs"] = out
    if cfg.method == "all":
        eq = fairness.compare_methods(
            grid, params, n_total, cfg.tolerances["cross_method"], cfg.tolerances["fixed_point"]
        )
        results["equivalence"] = eq.as_dict()
    return results


def cmd_solve(cfg: RunConfig):
    started = time.perf_counter()
    return _envelope("solve", cfg, _solve_results(cfg), started)


def cmd_simulate(cfg: RunConfig):
    if cfg.sim is None:
        raise ValidationError("simulation", "the config has no simulation section")
    started = time.perf_counter()
    sim = cfg.sim
    grid, params = cfg.grid, cfg.params
    state = dynamics.init_population(grid, sim.n_agents, sim.placement, sim.seed)
    trace = dynamics.run(state, grid, params, sim.protocol, sim.temperature, sim.steps, sim.snapshot_every)
    empirical = dynamics.empirical_distribution(trace, sim.burn_in)
    theory = closed_form.equilibrium_occupancy(grid, params, 1.0).fractions
    tv = fairness.total_variation(empirical, theory)
    results = {
        "grid": {"salaries": grid.levels.tolist(), "log_salaries": grid.log_levels.tolist()},
        "summary": trace.summary(sim.burn_in),
        "closed_form_fractions": theory.tolist(),
        "tv_to_closed_form": tv,
        "within_tolerance": tv <= cfg.tolerances["simulation_tv"],
        "trace": {
            "steps": trace.steps.tolist(),
            "counts": trace.counts.tolist(),
            "utility_spread": trace.utility_spread.tolist(),
        },
    }
    if sim.protocol == "logit":
        rest = dynamics.logit_rest_point(grid, params, sim.temperature)
        results["logit_rest_point"] = rest.tolist()
        results["tv_to_logit_rest_point"] = fairness.total_variation(empirical, rest)
    return _envelope("simulate", cfg, results, started)


def _check(name, passed, value=None, tolerance=None, detail=None, status=None):
    return {
        "name": name,
        "status": status or ("pass" if passed else "fail"),
        "value": value,
        "tolerance": tolerance,
        "detail": detail,
    }


def _lognormal_fit(grid, params, fractions):
    """Least-squares quadratic fit of ln x against ln S; returns
    (linear, quadratic, vertex of ln x + ln S)."""
    l = grid.log_levels
    design = np.column_stack([np.ones_like(l), l, l * l])
    coef = np.linalg.lstsq(design, np.log(fractions), rcond=None)[0]
    # the density form divides by S, so its log-vertex uses the linear term + 1
    vertex = -(coef[1] + 1.0) / (2.0 * coef[2])
    return coef[1], coef[2], vertex


def run_checks(cfg: RunConfig):
    """The identity battery behind ``verify``. Returns a list of check dicts."""
    grid, params, n_total, tol = cfg.grid, cfg.params, cfg.n_total, cfg.tolerances
    seed, samples = cfg.verify["seed"], cfg.verify["samples"]
    g = params.gamma
    checks = []

    rep = closed_form.report(grid, params, n_total)
    x = rep.occupancy.fractions
    h = np.asarray(effective_utility(grid.levels, rep.occupancy.counts, params))
    spread = float(h.max() - h.min())
    checks.append(_check("equal_effective_utility", spread <= tol["equal_utility"], spread, tol["equal_utility"]))

    partition_h = g * math.log(rep.z) - g * math.log(n_total)
    rel = abs(rep.h_star - partition_h) / max(abs(partition_h), 1e-300)
    level_err = float(np.max(np.abs(h - rep.h_star))) / max(1.0, abs(rep.h_star))
    checks.append(_check("h_star_identity", max(rel, level_err) <= tol["equal_utility"],
                         max(rel, level_err), tol["equal_utility"],
                         "h* against gamma ln Z - gamma ln N and against each level's utility"))

    lam_form = closed_form.lognormal_fractions(grid, params, n_total, rep.lam)
    lam_err = float(np.max(np.abs(lam_form / x - 1.0)))
    checks.append(_check("lagrange_multiplier_equals_h_star", lam_err <= tol["lagrange_form"],
                         lam_err, tol["lagrange_form"], "lognormal form with lambda = h* vs softmax"))

    h_total_err = abs(rep.h_total - float(np.sum(rep.occupancy.counts * h))) / max(abs(rep.h_total), 1e-300)
    checks.append(_check("total_utility_identity", h_total_err <= tol["total_utility"], h_total_err,
                         tol["total_utility"], "H* = N h* against sum of N_i h_i"))

    payroll = sum(float(c) * float(s) for c, s in zip(rep.occupancy.counts, grid.levels))
    m_err = abs(rep.m_total - payroll) / max(abs(payroll), 1e-300)
    checks.append(_check("payroll_identity", m_err <= tol["payroll"], m_err, tol["payroll"]))

    if grid.n >= 3:
        lin, quad, vertex = _lognormal_fit(grid, params, x)
        fit_err = max(abs(lin - params.alpha / g), abs(quad + params.beta / g), abs(vertex - rep.lognormal_mu))
        checks.append(_check("lognormal_shape", fit_err <= tol["lognormal_fit"], fit_err, tol["lognormal_fit"]))
    else:
        checks.append(_check("lognormal_shape", True, detail="needs at least 3 levels", status="skipped"))

    phi_gap = fairness.entropy_decomposition(grid, params, n_total)[2]
    checks.append(_check("entropy_equals_phi_w", phi_gap <= tol["entropy_identity"], phi_gap, tol["entropy_identity"]))

    try:
        pot = potential.maximize_potential(grid, params, n_total, tol=tol["fixed_point"],
                                           max_iters=cfg.verify["max_iters"])
        gap = float(np.max(np.abs(pot.occupancy.fractions - x)))
        checks.append(_check("potential_equals_closed_form", gap <= tol["cross_method"], gap, tol["cross_method"]))
    except NotConverged as exc:
        checks.append(_check("potential_equals_closed_form", False, detail=f"NotConverged: {exc}"))

    try:
        sol = nbs.solve(grid, params, n_total)
    except NonpositiveUtility as exc:
        detail = f"NonpositiveUtility: {exc}"
        for name in ("nbs_equals_closed_form", "kkt_residual", "kkt_binding", "lambert_round_trip", "axiom_probes"):
            checks.append(_check(name, False, detail=detail))
    else:
        gap = float(np.max(np.abs(sol.occupancy.fractions - x)))
        checks.append(_check("nbs_equals_closed_form", gap <= tol["cross_method"], gap, tol["cross_method"]))
        hn = np.asarray(effective_utility(grid.levels, sol.occupancy.counts, params))
        kkt = float(np.max(np.abs(np.log(hn) - g / hn - sol.mu)))
        checks.append(_check("kkt_residual", kkt <= tol["kkt_residual"], kkt, tol["kkt_residual"]))
        checks.append(_check("kkt_binding", sol.mu > 0, sol.mu, 0.0, "KKT multiplier must be positive"))
        back = nbs.h_from_mu(sol.mu, params)
        rt = abs(back - sol.h_star) / sol.h_star
        checks.append(_check("lambert_round_trip", rt <= tol["lambert_round_trip"], rt, tol["lambert_round_trip"]))
        probes = nbs.axiom_probes(grid, params, n_total)
        worst = max(probes.symmetry_gap, probes.permutation_gap, probes.shift_occupancy_gap, probes.shift_h_star_error)
        checks.append(_check("axiom_probes", probes.passed(tol["axiom_probe"]), worst, tol["axiom_probe"]))

    n_amgm = max(grid.n, 2)
    v = fairness.amgm_property_check(n_amgm, samples, seed)
    checks.append(_check("amgm", v == 0, v, 0, f"{samples} simplex points, n={n_amgm}"))

    if math.floor(n_total) >= grid.n:
        wit = nbs.convexity_witness(grid, params, n_total, samples, seed)
        checks.append(_check("convexity_witness", wit.violations == 0, wit.violations, 0,
                             f"max combined total {wit.max_combined_total!r} of {n_total!r}"))
    else:
        checks.append(_check("convexity_witness", True, detail="N below one agent per level", status="skipped"))
    return checks


def cmd_verify(cfg: RunConfig):
    """Run the identity battery. Returns ``(report, exit_status)``."""
    started = time.perf_counter()
    checks = run_checks(cfg)
    passed = all(c["status"] != "fail" for c in checks)
    results = {"passed": passed, "checks": checks}
    return _envelope("verify", cfg, results, started), 0 if passed else 1


def _point_config(cfg: RunConfig, param, value):
    if param == "n_total":
        if not value > 0:
            raise ValidationError("n_total", "must be positive")
        return replace(cfg, n_total=float(value))
    values = cfg.params.as_dict()
    values[param] = float(value)
    return replace(cfg, params=ModelParams(**values))


def cmd_sweep(cfg: RunConfig, param, values):
    """Re-solve for each value of ``param``; failing points are kept and marked."""
    if param not in SWEEP_PARAMS:
        raise ValidationError("sweep_param", f"must be one of {SWEEP_PARAMS}, got {param!r}")
    reports = []
    for value in values:
        started = time.perf_counter()
        try:
            point_cfg = _point_config(cfg, param, value)
        except (InvalidParameter, ValidationError) as exc:
            results = {"errors": {"config": f"{type(exc).__name__}: {exc}"}}
            point_cfg = cfg
        else:
            results = _solve_results(point_cfg)
        report = _envelope("solve", point_cfg, results, started,
                           extra={"sweep_point": {"param": param, "value": float(value)}})
        reports.append(report)
    return reports


def sweep_rows(reports):
    """Long-format table: one row per (sweep point, quantity)."""
    rows = []
    for rep in reports:
        point = rep["sweep_point"]
        res = rep["results"]
        status = "ok" if not res.get("errors") else "error"
        quantities = {}
        if "closed" in res:
            c = res["closed"]
            for key in ("h_star", "z", "m_total", "h_total", "entropy", "lognormal_mu", "lognormal_sigma_sq"):
                quantities[key] = c[key]
        if "nbs" in res:
            quantities["mu"] = res["nbs"]["mu"]
        if "equivalence" in res:
            quantities["max_method_gap"] = max(res["equivalence"]["gaps"].values(), default=0.0)
        error = "; ".join(f"{k}: {v}" for k, v in res.get("errors", {}).items())
        if not quantities:
            rows.append({"param": point["param"], "value": point["value"], "status": status,
                         "quantity": "", "result": "", "error": error})
        for name, val in quantities.items():
            rows.append({"param": point["param"], "value": point["value"], "status": status,
                         "quantity": name, "result": val, "error": error})
    return rows


def cmd_sweep_report(cfg: RunConfig, param, values):
    started = time.perf_counter()
    reports = cmd_sweep(cfg, param, values)
    for rep in reports:
        rep.pop("duration_seconds", None)
    results = {"rows": sweep_rows(reports), "points": reports}
    return _envelope("sweep", cfg, results, started,
                     extra={"sweep": {"param": param, "values": [float(v) for v in values]}})
