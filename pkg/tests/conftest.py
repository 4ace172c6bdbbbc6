import math

import numpy as np
import pytest

from fairincome.closed_form import log_partition_function
from fairincome.model import ModelParams, SalaryGrid, base_utility_from_log, build_salary_grid
from fairincome.special import lambert_w0

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def grid_from_logs(logs):
    return SalaryGrid.from_log_levels(logs)


def binding_threshold(gamma):
    """Smallest h* with ln h - gamma/h >= 0, i.e. gamma / W(gamma)."""
    return gamma / lambert_w0(gamma).value


def random_configs(seed, count, n_range=(2, 64), integer_population=False):
    """Random (grid, params, N) triples with h* above the binding threshold,
    so the bargaining multiplier is positive.

    Configs whose base utilities span more than 500 in units of gamma are
    redrawn: occupancies would then underflow a double.
    """
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = int(rng.integers(n_range[0], n_range[1], endpoint=True))
        alpha, beta, gamma = rng.uniform(0.1, 5.0, size=3)
        params = ModelParams(float(alpha), float(beta), float(gamma))
        lo = rng.uniform(-1.0, 2.0)
        width = rng.uniform(0.5, 6.0)
        grid = build_salary_grid(math.exp(lo), math.exp(lo + width), n)
        a = base_utility_from_log(grid.log_levels, params) / gamma
        if a.max() - a.min() > 500:
            continue
        log_z = log_partition_function(grid, params)
        h_target = binding_threshold(gamma) * rng.uniform(1.1, 3.0)
        if integer_population:
            n_total = float(rng.integers(n, 10_000, endpoint=True))
        else:
            log_n = log_z - h_target / gamma
            if not -14 < log_n < 35:
                continue
            n_total = math.exp(log_n)
        out.append((grid, params, n_total))
    return out


@pytest.fixture(scope="session")
def configs100():
    return random_configs(20261015, 100)


@pytest.fixture
def sym():
    """ln S = [1, 2] with alpha=3, beta=1: both levels have base utility 2."""
    return grid_from_logs([1.0, 2.0]), ModelParams(3.0, 1.0, 1.0)


@pytest.fixture
def asym():
    """ln S = [1, 2] with alpha=1, beta=0.5, gamma=1: base utilities 0.5 and 0."""
    return grid_from_logs([1.0, 2.0]), ModelParams(1.0, 0.5, 1.0)
