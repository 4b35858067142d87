import numpy as np
import pytest

from hjb_blowup.control import (
    SimConfig,
    StabilityError,
    _interp_bilinear,
    discounted_cost,
    simulate,
    verify_value,
)
from hjb_blowup.diagnostics import optimal_drift_1d
from hjb_blowup.mesh import Grid1D, Grid2D, gradient_1d
from hjb_blowup.model import ProblemSpec, conjugate, hamiltonian, hamiltonian_prime, weight_b

REF = ProblemSpec(q=1.6, beta=0.5)


class _ZeroNoise:
    """Stands in for a Generator; returns zero increments."""

    def standard_normal(self, shape):
        return np.zeros(shape)


class TestSimConfig:
    def test_scalar_start_coerced(self):
        cfg = SimConfig(start_point=0.3)
        assert cfg.start_point == (0.3,)

    @pytest.mark.parametrize(
        "kw",
        [
            {"dt": 0.0},
            {"horizon_t": 1e-6, "dt": 1e-3},
            {"n_paths": 0},
            {"reflect_clip": 0.0},
        ],
    )
    def test_invalid_rejected(self, kw):
        with pytest.raises(ValueError):
            SimConfig(**kw)


class TestSimulate:
    def test_zero_drift_zero_noise_stays_put(self, ref_grid, ref_solution):
        sim = SimConfig(horizon_t=0.5, dt=1e-3, n_paths=8, seed=1, start_point=(0.2,))
        batch = simulate(REF, ref_grid, ref_solution, sim, drift_scale=0.0, rng=_ZeroNoise())
        assert batch.exit_fraction == 0.0
        # stationary path at x0: cost integrates the discounted source only
        a0 = (1.0 - 0.2**2) ** REF.alpha
        expected = REF.f_level * (1.0 - np.exp(-a0 * 0.5)) / a0
        np.testing.assert_allclose(batch.cost_estimates, expected, atol=1e-3)

    def test_seed_determinism(self, ref_grid, ref_solution):
        sim = SimConfig(horizon_t=1.0, dt=1e-3, n_paths=32, seed=777)
        b1 = simulate(REF, ref_grid, ref_solution, sim)
        b2 = simulate(REF, ref_grid, ref_solution, sim)
        assert np.array_equal(b1.cost_estimates, b2.cost_estimates)
        assert np.array_equal(b1.exit_flags, b2.exit_flags)
        assert b1.exit_fraction == b2.exit_fraction

    def test_exit_fraction_monotone_in_drift_scale(self, ref_grid, ref_solution):
        sim = SimConfig(horizon_t=2.0, dt=1e-3, n_paths=200, seed=5)
        fractions = [
            simulate(REF, ref_grid, ref_solution, sim, drift_scale=s).exit_fraction
            for s in (0.0, 0.5, 1.0)
        ]
        assert fractions[0] >= fractions[1] >= fractions[2]

    def test_frozen_paths_keep_state_and_cost(self, ref_grid, ref_solution):
        sim = SimConfig(horizon_t=2.0, dt=1e-3, n_paths=64, seed=11)
        batch = simulate(
            REF, ref_grid, ref_solution, sim, drift_scale=0.0, return_paths=True
        )
        assert batch.exit_fraction > 0.0
        exited = np.where(batch.exit_flags)[0]
        i = exited[0]
        path = batch.paths[:, i]
        # after exit the path is frozen
        d = ref_grid.L - np.abs(path)
        k_exit = int(np.argmax(d <= sim.reflect_clip))
        assert np.all(path[k_exit:] == path[k_exit])

    def test_stability_guard(self, ref_grid, ref_solution):
        sim = SimConfig(horizon_t=2.0, dt=1.0, n_paths=4, seed=2)
        with pytest.raises(StabilityError):
            simulate(REF, ref_grid, ref_solution, sim)

    def test_start_point_validation(self, ref_grid, ref_solution):
        sim = SimConfig(start_point=(0.96,))
        with pytest.raises(ValueError):
            simulate(REF, ref_grid, ref_solution, sim)

    def test_2d_smoke_deterministic(self):
        grid = Grid2D(n_per_axis=40)
        from hjb_blowup.solver import DEFAULTS_2D, solve_2d, with_overrides

        report = solve_2d(REF, grid, with_overrides(DEFAULTS_2D, max_iter=400, tol=1e-9))
        sim = SimConfig(horizon_t=0.5, dt=1e-3, n_paths=16, seed=3, start_point=(0.0, 0.0))
        b1 = simulate(REF, grid, report.solution, sim)
        b2 = simulate(REF, grid, report.solution, sim)
        assert np.array_equal(b1.cost_estimates, b2.cost_estimates)
        assert 0.0 <= b1.exit_fraction <= 1.0


class TestDiscountedCost:
    def test_stationary_path_analytic(self):
        x0, T, dt = 0.3, 2.0, 1e-3
        n = int(T / dt)
        path = np.full(n + 1, x0)
        drifts = np.zeros(n)
        got = discounted_cost(REF, path, drifts, dt)
        a0 = (1.0 - x0**2) ** REF.alpha
        expected = REF.f_level * (1.0 - np.exp(-a0 * T)) / a0
        assert got == pytest.approx(expected, abs=1e-3)

    def test_zero_control_costs_nothing_beyond_source(self):
        spec = ProblemSpec(q=2.0, beta=0.5, f_level=0.0)
        path = np.array([0.1, 0.1])
        assert discounted_cost(spec, path, np.array([0.0]), 0.5) == 0.0

    def test_quadratic_conjugate_unit_case(self):
        # q = 2, b = 1 at the origin, |xi| = 2: running cost h*(2) = 1
        spec = ProblemSpec(q=2.0, beta=0.5, f_level=0.0)
        got = discounted_cost(spec, np.array([0.0, 0.0]), np.array([2.0]), 1.0)
        assert got == pytest.approx(1.0, rel=1e-12)

    def test_exit_truncates(self):
        path = np.array([0.0, 0.5, 0.9])
        drifts = np.zeros(2)
        full = discounted_cost(REF, path, drifts, 0.1)
        cut = discounted_cost(REF, path, drifts, 0.1, exit_step=1)
        assert cut < full

    def test_discount_monotone_in_reaction_weight(self, rng):
        # larger alpha lowers a = v^alpha on v <= 1, weakening the discount,
        # so the cost is nondecreasing in alpha
        n = 200
        path = np.clip(np.cumsum(rng.normal(0.0, 0.02, n + 1)), -0.8, 0.8)
        drifts = rng.normal(0.0, 1.0, n)
        costs = [
            discounted_cost(ProblemSpec(q=1.6, beta=0.5, alpha=al), path, drifts, 1e-2)
            for al in (-1.0, -0.2, 0.5, 1.5)
        ]
        assert all(c1 <= c2 + 1e-12 for c1, c2 in zip(costs, costs[1:]))

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            discounted_cost(REF, np.zeros(3), np.zeros(3), 0.1)


class TestFenchelAlongPaths:
    def test_inequality_and_feedback_equality(self, ref_grid, ref_solution):
        sim = SimConfig(horizon_t=0.5, dt=1e-3, n_paths=16, seed=9)
        batch = simulate(REF, ref_grid, ref_solution, sim, return_paths=True)
        states = batch.paths[::25].ravel()
        du_field = gradient_1d(ref_solution, ref_grid)
        xi_field, _ = optimal_drift_1d(REF, ref_grid, ref_solution)
        du = np.interp(states, ref_grid.x, du_field)
        v = np.maximum(1.0 - states**2, ref_grid.v_floor)
        b = weight_b(REF, v)

        # the interpolated drift the integrator uses obeys the inequality
        xi_interp = np.interp(states, ref_grid.x, xi_field)
        lhs = -xi_interp * du
        rhs = b * hamiltonian(REF, np.abs(du)) + b * conjugate(REF, np.abs(xi_interp) / b)
        assert np.all(lhs <= rhs + 1e-8 * np.maximum(rhs, 1.0))

        # the pointwise feedback control attains equality
        xi_fb = -b * hamiltonian_prime(REF, np.abs(du)) * np.sign(du)
        lhs_fb = -xi_fb * du
        rhs_fb = b * hamiltonian(REF, np.abs(du)) + b * conjugate(REF, np.abs(xi_fb) / b)
        scale = np.maximum(rhs_fb, 1e-9)
        assert np.max(np.abs(lhs_fb - rhs_fb) / scale) <= 1e-4

        # detuned controls lose strictly
        xi_half = 0.5 * xi_fb
        lhs_h = -xi_half * du
        rhs_h = b * hamiltonian(REF, np.abs(du)) + b * conjugate(REF, np.abs(xi_half) / b)
        assert np.all(lhs_h <= rhs_h + 1e-8)


class TestVerifyValue:
    def test_single_path_reproducible(self, ref_grid, ref_solution):
        sim = SimConfig(horizon_t=0.5, dt=1e-3, n_paths=1, seed=4)
        c1 = verify_value(REF, ref_grid, ref_solution, sim)
        c2 = verify_value(REF, ref_grid, ref_solution, sim)
        assert c1 == c2

    def test_reports_ratio(self, ref_grid, ref_solution):
        sim = SimConfig(horizon_t=1.0, dt=1e-3, n_paths=64, seed=12)
        comp = verify_value(REF, ref_grid, ref_solution, sim)
        assert comp.u_at_start == pytest.approx(
            np.interp(0.0, ref_grid.x, ref_solution), rel=1e-12
        )
        assert comp.ratio == pytest.approx(comp.cost_mean / comp.u_at_start, rel=1e-12)


class TestBilinearInterp:
    def test_exact_on_bilinear_functions(self, rng):
        grid = Grid2D(n_per_axis=40)
        values = 2.0 + 3.0 * grid.x1 - grid.x2 + 0.5 * grid.x1 * grid.x2
        pts = rng.uniform(-0.99, 0.99, (50, 2))
        got = _interp_bilinear(pts, grid, values)
        expected = 2.0 + 3.0 * pts[:, 0] - pts[:, 1] + 0.5 * pts[:, 0] * pts[:, 1]
        np.testing.assert_allclose(got, expected, rtol=1e-12)
