"""Monte Carlo audit of the stochastic-control reading of the solution.

The controlled state follows dX = xi(X) dt + sqrt(2) dW and is penalized
by the discounted running cost; if the solved field really is the value
function, the empirical cost of the feedback policy started at x should
match u(x) up to truncation bias.  Paths that reach the boundary layer
are frozen and their cost integral truncated — empirical exits are a
discretization artifact to be measured, not hidden.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh import Grid1D, Grid2D
from .model import ProblemSpec, conjugate, weight_a, weight_b
from .diagnostics import optimal_drift_1d, optimal_drift_2d

__all__ = [
    "SimConfig",
    "TrajectoryBatch",
    "ValueComparison",
    "StabilityError",
    "simulate",
    "discounted_cost",
    "verify_value",
]


class StabilityError(ValueError):
    """dt too large for the drift magnitude."""


@dataclass(frozen=True)
class SimConfig:
    horizon_t: float = 5.0
    dt: float = 1e-3
    n_paths: int = 500
    seed: int = 0
    start_point: tuple[float, ...] = (0.0,)
    reflect_clip: float = 0.05

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.horizon_t < self.dt:
            raise ValueError("horizon_t must be at least one step")
        if self.n_paths < 1:
            raise ValueError(f"n_paths must be >= 1, got {self.n_paths}")
        if not self.reflect_clip > 0:
            raise ValueError(f"reflect_clip must be positive, got {self.reflect_clip}")
        if isinstance(self.start_point, (int, float)):
            object.__setattr__(self, "start_point", (float(self.start_point),))

    def n_steps(self) -> int:
        return int(round(self.horizon_t / self.dt))


@dataclass(frozen=True)
class TrajectoryBatch:
    exit_fraction: float
    cost_estimates: np.ndarray = field(repr=False, compare=False)
    cost_mean: float = 0.0
    cost_stderr: float = 0.0
    exit_flags: np.ndarray | None = field(default=None, repr=False, compare=False)
    paths: np.ndarray | None = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class ValueComparison:
    u_at_start: float
    cost_mean: float
    cost_stderr: float
    ratio: float
    exit_fraction: float


def _clamped_v(x_sq_sum: np.ndarray, floor: float) -> np.ndarray:
    return np.maximum(1.0 - x_sq_sum, floor)


def _interp_linear(xq: np.ndarray, grid: Grid1D, values: np.ndarray) -> np.ndarray:
    # np.interp holds endpoint values outside the grid
    return np.interp(xq, grid.x, values)


def _interp_bilinear(pts: np.ndarray, grid: Grid2D, values: np.ndarray) -> np.ndarray:
    axis = grid.axis
    dx = grid.dx
    n = axis.size
    fi = np.clip((pts[:, 0] - axis[0]) / dx, 0.0, n - 1.000001)
    fj = np.clip((pts[:, 1] - axis[0]) / dx, 0.0, n - 1.000001)
    i = fi.astype(np.int64)
    j = fj.astype(np.int64)
    si = fi - i
    sj = fj - j
    return (
        values[i, j] * (1 - si) * (1 - sj)
        + values[i + 1, j] * si * (1 - sj)
        + values[i, j + 1] * (1 - si) * sj
        + values[i + 1, j + 1] * si * sj
    )


def _running_cost(spec: ProblemSpec, v: np.ndarray, xi_norm: np.ndarray) -> np.ndarray:
    """L(x, xi) = b(x) h*(|xi| / b(x)); v is the clamped defining function."""
    b = weight_b(spec, v)
    return b * conjugate(spec, xi_norm / b)


def simulate(
    spec: ProblemSpec,
    grid: Grid1D | Grid2D,
    u: np.ndarray,
    sim: SimConfig,
    *,
    drift_scale: float = 1.0,
    rng: np.random.Generator | None = None,
    return_paths: bool = False,
) -> TrajectoryBatch:
    """Euler-Maruyama ensemble under the interpolated feedback drift.

    X_{k+1} = X_k + xi(X_k) dt + sqrt(2 dt) G_k; a path whose boundary
    distance falls to reflect_clip or below is frozen there.  drift_scale
    rescales the drift field (0 gives the uncontrolled diffusion).
    Deterministic for a given seed; pass rng to override the noise
    source entirely (the zero-noise test harness does).
    """
    dim = 1 if isinstance(grid, Grid1D) else 2
    if len(sim.start_point) != dim:
        raise ValueError(f"start_point has {len(sim.start_point)} coordinates, grid is {dim}D")
    if dim == 1:
        half_width = grid.L - grid.delta
        if not abs(sim.start_point[0]) < half_width:
            raise ValueError("start_point must lie strictly inside the truncated domain")
        xi_fields = optimal_drift_1d(spec, grid, u)[0] * drift_scale
        max_xi = float(np.max(np.abs(xi_fields)))
    else:
        half_width = 1.0 - grid.delta
        if not np.hypot(*sim.start_point) < half_width:
            raise ValueError("start_point must lie strictly inside the truncated domain")
        xi1, xi2, _ = optimal_drift_2d(spec, grid, u)
        xi1 = xi1 * drift_scale
        xi2 = xi2 * drift_scale
        max_xi = float(np.max(np.hypot(xi1, xi2)))
    if not np.isfinite(max_xi):
        raise ValueError("drift field is not finite")
    # one drift step must not be able to traverse the whole domain
    if sim.dt * max_xi > half_width:
        raise StabilityError(
            f"dt * max|drift| = {sim.dt * max_xi:.3g} exceeds the half-width {half_width:.3g}"
        )

    if rng is None:
        rng = np.random.default_rng(sim.seed)
    n_steps = sim.n_steps()
    n_paths = sim.n_paths
    dt = sim.dt
    root_2dt = np.sqrt(2.0 * dt)
    floor = grid.v_floor

    if dim == 1:
        X = np.full(n_paths, sim.start_point[0])
    else:
        X = np.tile(np.asarray(sim.start_point, dtype=float), (n_paths, 1))
    alive = np.ones(n_paths, dtype=bool)
    cost = np.zeros(n_paths)
    discount_exp = np.zeros(n_paths)
    stored = np.empty((n_steps + 1,) + X.shape) if return_paths else None
    if return_paths:
        stored[0] = X

    def v_of(states):
        sq = states**2 if dim == 1 else np.sum(states**2, axis=1)
        return _clamped_v(sq, floor)

    def drift_of(states):
        if dim == 1:
            return _interp_linear(states, grid, xi_fields)
        return np.stack(
            [_interp_bilinear(states, grid, xi1), _interp_bilinear(states, grid, xi2)], axis=1
        )

    def distance_of(states):
        if dim == 1:
            return grid.L - np.abs(states)
        return 1.0 - np.sqrt(np.sum(states**2, axis=1))

    a_prev = weight_a(spec, v_of(X))
    for k in range(n_steps):
        xi = drift_of(X)
        xi_norm = np.abs(xi) if dim == 1 else np.linalg.norm(xi, axis=1)
        run = _running_cost(spec, v_of(X), xi_norm) + spec.f_level
        cost += np.where(alive, np.exp(-discount_exp) * run * dt, 0.0)
        noise = rng.standard_normal(X.shape)
        X_next = X + xi * dt + root_2dt * noise
        if dim == 1:
            X = np.where(alive, X_next, X)
        else:
            X = np.where(alive[:, None], X_next, X)
        newly_exited = alive & (distance_of(X) <= sim.reflect_clip)
        alive &= ~newly_exited
        a_new = weight_a(spec, v_of(X))
        discount_exp += np.where(alive, 0.5 * (a_prev + a_new) * dt, 0.0)
        a_prev = a_new
        if return_paths:
            stored[k + 1] = X

    exit_flags = ~alive
    mean = float(np.mean(cost))
    stderr = float(np.std(cost, ddof=1) / np.sqrt(n_paths)) if n_paths > 1 else 0.0
    return TrajectoryBatch(
        exit_fraction=float(np.mean(exit_flags)),
        cost_estimates=cost,
        cost_mean=mean,
        cost_stderr=stderr,
        exit_flags=exit_flags,
        paths=stored,
    )


def discounted_cost(
    spec: ProblemSpec,
    path: np.ndarray,
    drift_values: np.ndarray,
    dt: float,
    v_floor: float = 1e-10,
    exit_step: int | None = None,
) -> float:
    """Single-path quadrature of the discounted running cost.

    path has n+1 states, drift_values the n controls applied on the
    steps; left-endpoint rule for the integrand, trapezoid for the
    discount exponent.  exit_step truncates the integral.
    """
    path = np.asarray(path, dtype=float)
    drift_values = np.asarray(drift_values, dtype=float)
    n = drift_values.shape[0]
    if path.shape[0] != n + 1:
        raise ValueError("path must have one more state than drift_values")
    stop = n if exit_step is None else min(exit_step, n)
    sq = path**2 if path.ndim == 1 else np.sum(path**2, axis=1)
    v = _clamped_v(sq, v_floor)
    a = weight_a(spec, v)
    xi_norm = np.abs(drift_values) if drift_values.ndim == 1 else np.linalg.norm(drift_values, axis=1)
    total = 0.0
    discount_exp = 0.0
    for k in range(stop):
        run = float(_running_cost(spec, np.asarray([v[k]]), np.asarray([xi_norm[k]]))[0]) + spec.f_level
        total += np.exp(-discount_exp) * run * dt
        discount_exp += 0.5 * (a[k] + a[k + 1]) * dt
    return float(total)


def verify_value(
    spec: ProblemSpec, grid: Grid1D | Grid2D, u: np.ndarray, sim: SimConfig
) -> ValueComparison:
    """Compare the Monte Carlo cost of the feedback policy against the
    solved field at the start point.  No pass threshold is baked in."""
    batch = simulate(spec, grid, u, sim)
    if isinstance(grid, Grid1D):
        u_start = float(_interp_linear(np.asarray(sim.start_point), grid, u)[0])
    else:
        u_start = float(_interp_bilinear(np.asarray([sim.start_point]), grid, u)[0])
    ratio = batch.cost_mean / u_start if u_start != 0 else np.inf
    return ValueComparison(
        u_at_start=u_start,
        cost_mean=batch.cost_mean,
        cost_stderr=batch.cost_stderr,
        ratio=float(ratio),
        exit_fraction=batch.exit_fraction,
    )
