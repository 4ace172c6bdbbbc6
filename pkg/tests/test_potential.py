import math

import numpy as np
import pytest

from conftest import grid_from_logs
from fairincome.closed_form import equilibrium_occupancy
from fairincome.errors import DomainError, NotConverged, NotIntegral
from fairincome.model import ModelParams, effective_utility
from fairincome.potential import (
    concavity_diagnostic,
    maximize_potential,
    potential_gradient,
    potential_value,
)


class TestValue:
    def test_example(self, asym):
        grid, p = asym
        v = potential_value([0.5, 0.5], grid, p, 1.0)
        assert v.phi_u + v.phi_v == pytest.approx(0.25, abs=1e-15)
        assert v.phi_w == pytest.approx(math.log(2), abs=1e-15)
        assert v.total == pytest.approx(0.943147, abs=1e-6)
        assert v.total == v.phi_u + v.phi_v + v.phi_w

    def test_single(self):
        p = ModelParams(2.0, 0.5, 1.0)
        v = potential_value([1.0], grid_from_logs([1.0]), p, 10.0)
        assert v.phi_w == 0.0
        assert v.total == pytest.approx(1.5)

    def test_corner(self, asym):
        assert potential_value([1.0, 0.0], *asym, 5.0).phi_w == 0.0

    def test_off_simplex_rejected(self, asym):
        with pytest.raises(DomainError):
            potential_value([0.5, 0.6], *asym, 5.0)
        with pytest.raises(DomainError):
            potential_value([1.2, -0.2], *asym, 5.0)

    def test_exact_mode(self, asym):
        grid, p = asym
        v = potential_value([0.5, 0.5], grid, p, 4.0, mode="exact_factorial")
        assert v.phi_w == pytest.approx(math.log(6) / 4, rel=1e-14)  # (1/N) ln(4!/(2!2!))
        with pytest.raises(NotIntegral):
            potential_value([0.3, 0.7], grid, p, 4.0, mode="exact_factorial")

    def test_stirling_limit(self, asym):
        grid, p = asym
        x = np.array([0.25, 0.75])
        stir = potential_value(x, grid, p, 4.0).phi_w
        gaps = [abs(potential_value(x, grid, p, n, mode="exact_factorial").phi_w - stir)
                for n in (8, 80, 800, 8000, 80000)]
        assert all(a > b for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < 1e-3


class TestGradient:
    def test_symmetric(self, sym):
        np.testing.assert_allclose(potential_gradient([0.5, 0.5], *sym, 2.0), [2.0, 2.0], atol=1e-15)

    def test_equals_utility(self, configs100):
        rng = np.random.default_rng(5)
        for grid, p, n in configs100[:20]:
            x = rng.dirichlet(np.ones(grid.n))
            x = 0.5 * x + 0.5 / grid.n
            np.testing.assert_array_equal(
                potential_gradient(x, grid, p, n), effective_utility(grid.levels, n * x, p))

    def test_boundary(self, asym):
        with pytest.raises(DomainError):
            potential_gradient([1.0, 0.0], *asym, 3.0)

    def test_finite_difference(self, asym):
        grid, p = asym
        x = np.array([0.3, 0.7])
        g = potential_gradient(x, grid, p, 7.0)
        for i in range(2):
            e = np.zeros(2)
            e[i] = 1e-6
            fd = (potential_value(x + e, grid, p, 7.0, check_simplex=False).total
                  - potential_value(x - e, grid, p, 7.0, check_simplex=False).total) / 2e-6
            assert fd == pytest.approx(g[i], abs=1e-8)


class TestConcavity:
    def test_examples(self):
        np.testing.assert_allclose(concavity_diagnostic([0.5, 0.5], ModelParams(1, 1, 1)), [-2, -2])
        np.testing.assert_allclose(concavity_diagnostic([0.25, 0.75], ModelParams(1, 1, 2)), [-8, -8 / 3])

    def test_boundary(self):
        with pytest.raises(DomainError):
            concavity_diagnostic([0.0, 1.0], ModelParams(1, 1, 1))

    def test_midpoint_concavity(self, configs100):
        rng = np.random.default_rng(6)
        for grid, p, n in configs100[:30]:
            a, b = rng.dirichlet(np.ones(grid.n), size=2)
            fa, fb = (potential_value(v, grid, p, n).total for v in (a, b))
            fm = potential_value(0.5 * (a + b), grid, p, n).total
            assert fm >= 0.5 * (fa + fb) - 1e-12 * max(1.0, abs(fa), abs(fb))


class TestMaximize:
    def test_asymmetric(self, asym):
        grid, p = asym
        r = maximize_potential(grid, p, 1.0)
        assert r.converged
        w = math.exp(0.5) / (math.exp(0.5) + 1)
        assert np.max(np.abs(r.fractions - [w, 1 - w])) <= 1e-8

    def test_symmetric(self, sym):
        np.testing.assert_allclose(maximize_potential(*sym, 10.0).fractions, [0.5, 0.5], atol=1e-12)

    def test_single(self):
        r = maximize_potential(grid_from_logs([1.0]), ModelParams(1, 1, 1), 5.0)
        assert r.iterations == 1 and r.fractions.tolist() == [1.0]

    def test_ascent(self, configs100):
        for grid, p, n in configs100[:20]:
            r = maximize_potential(grid, p, n, record=True)
            v = np.array(r.values)
            assert np.all(np.diff(v) >= -1e-12 * np.maximum(1.0, np.abs(v[1:])))

    def test_unique_from_random_starts(self, configs100):
        rng = np.random.default_rng(7)
        for grid, p, n in configs100[:10]:
            ref = equilibrium_occupancy(grid, p, n).fractions
            for _ in range(10):
                start = rng.dirichlet(np.ones(grid.n))
                start = np.maximum(start, 1e-300)
                r = maximize_potential(grid, p, n, start=start / start.sum())
                assert np.max(np.abs(r.fractions - ref)) <= 1e-8

    def test_maximality_certificate(self, configs100):
        rng = np.random.default_rng(8)
        for grid, p, n in configs100[:20]:
            x = maximize_potential(grid, p, n).fractions
            best = potential_value(x, grid, p, n).total
            for _ in range(20):
                y = rng.dirichlet(np.ones(grid.n))
                assert potential_value(y, grid, p, n).total <= best + 1e-12 * max(1.0, abs(best))

    def test_gradient_certificate(self, configs100):
        for grid, p, n in configs100:
            g = potential_gradient(maximize_potential(grid, p, n).fractions, grid, p, n)
            assert g.max() - g.min() <= 1e-8

    def test_not_converged(self, configs100):
        grid, p, n = next(c for c in configs100 if c[0].n > 5)
        with pytest.raises(NotConverged) as exc:
            maximize_potential(grid, p, n, tol=1e-15, max_iters=2)
        assert exc.value.iterations == 2
        r = maximize_potential(grid, p, n, tol=1e-15, max_iters=2, raise_on_failure=False)
        assert not r.converged

    def test_bad_args(self, asym):
        with pytest.raises(ValueError):
            maximize_potential(*asym, 1.0, tol=0)
        with pytest.raises(ValueError):
            maximize_potential(*asym, 1.0, step=1.5)
        with pytest.raises(DomainError):
            maximize_potential(*asym, 1.0, start=[1.0, 0.0])
