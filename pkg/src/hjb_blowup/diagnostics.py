"""Verification battery: residuals, barriers, convexity, drift, scaling fits.

All analyses are read-only on the solved field.  Residuals are measured
with the same difference operators the solver iterates with, so a truly
converged solve audits to ~1e-9; measuring with mismatched stencils
would report pure truncation noise instead.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.stats import linregress

from .mesh import (
    Grid1D,
    Grid2D,
    defining_function,
    gradient_1d,
    gradient_2d,
    hessian_min_eigenvalue_2d,
    laplacian_2d,
    second_difference_1d,
)
from .model import (
    ProblemSpec,
    Regime,
    RegimeKind,
    UnsupportedRegimeError,
    classify_regime,
    critical_constant,
    hamiltonian,
    hamiltonian_prime,
    weight_a,
    weight_b,
)

__all__ = [
    "FitResult",
    "BarrierEnvelope",
    "residual_1d",
    "residual_2d",
    "max_residual_1d",
    "max_residual_2d",
    "barrier_envelope",
    "check_barriers",
    "clamp_to_envelope",
    "convexity_1d",
    "convexity_2d",
    "optimal_drift_1d",
    "optimal_drift_2d",
    "powerlaw_fit",
    "semilog_fit",
    "fit_powerlaw_samples",
    "fit_semilog_samples",
    "radial_slice",
]


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    window: tuple[float, float]
    point_count: int


class BarrierEnvelope(NamedTuple):
    lower: np.ndarray
    upper: np.ndarray


def _zero_nonfinite(arr: np.ndarray) -> tuple[np.ndarray, int]:
    bad = ~np.isfinite(arr)
    count = int(np.count_nonzero(bad))
    if count:
        arr = np.where(bad, 0.0, arr)
    return arr, count


def residual_1d(
    spec: ProblemSpec, grid: Grid1D, u: np.ndarray, u_bnd: float | None = None
) -> tuple[np.ndarray, int]:
    """Pointwise -u'' + b h(|u'|) + a u - f with the solver's stencils.

    Endpoint rows use the Dirichlet ghost value when given, else report 0.
    Returns (residual, count of non-finite entries zeroed).
    """
    v = defining_function(grid)
    with np.errstate(invalid="ignore", over="ignore"):
        du = gradient_1d(u, grid)
        d2u = second_difference_1d(u, grid, boundary_value=u_bnd)
        r = (
            -d2u
            + weight_b(spec, v) * hamiltonian(spec, np.abs(du))
            + weight_a(spec, v) * u
            - spec.f_level
        )
    if u_bnd is None:
        r[0] = 0.0
        r[-1] = 0.0
    return _zero_nonfinite(r)


def residual_2d(spec: ProblemSpec, grid: Grid2D, u: np.ndarray) -> tuple[np.ndarray, int]:
    """Masked 5-point residual; zero outside the interior mask."""
    v = defining_function(grid)
    with np.errstate(invalid="ignore", over="ignore"):
        d1, d2 = gradient_2d(u, grid)
        grad_mag = np.sqrt(d1**2 + d2**2)
        r = (
            -laplacian_2d(u, grid)
            + weight_b(spec, v) * hamiltonian(spec, grad_mag)
            + weight_a(spec, v) * u
            - spec.f_level
        )
    r = np.where(grid.interior_mask, r, 0.0)
    return _zero_nonfinite(r)


def max_residual_1d(
    spec: ProblemSpec,
    grid: Grid1D,
    u: np.ndarray,
    u_bnd: float | None = None,
    exclusion_band: float | None = None,
) -> float:
    """Max |residual| outside the near-truncation band (default 2*delta)."""
    band = 2.0 * grid.delta if exclusion_band is None else exclusion_band
    r, _ = residual_1d(spec, grid, u, u_bnd)
    keep = grid.boundary_distance() >= band
    return float(np.max(np.abs(r[keep])))


def max_residual_2d(
    spec: ProblemSpec, grid: Grid2D, u: np.ndarray, exclusion_band: float = 0.0
) -> float:
    """Max |residual| over interior points with d >= exclusion_band."""
    r, _ = residual_2d(spec, grid, u)
    keep = grid.interior_mask & (grid.boundary_distance() >= exclusion_band)
    return float(np.max(np.abs(r[keep])))


def barrier_envelope(
    spec: ProblemSpec, grid: Grid1D | Grid2D, plus: float = 1.02, minus: float = 0.98
) -> BarrierEnvelope:
    """(minus, plus) * C* * v^-gamma bracketing fields (gradient-dominant)."""
    regime = classify_regime(spec)
    if regime.kind is not RegimeKind.GRADIENT_DOMINANT:
        raise UnsupportedRegimeError("barrier envelopes require the gradient-dominant regime")
    c = critical_constant(spec, regime)
    v = defining_function(grid)
    shape = c * v ** (-regime.gamma)
    return BarrierEnvelope(lower=minus * shape, upper=plus * shape)


def check_barriers(u: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> int:
    """Count points outside [lower - eps, upper + eps], eps = 1e-9 * upper."""
    eps = 1e-9 * upper
    return int(np.count_nonzero((u < lower - eps) | (u > upper + eps)))


def clamp_to_envelope(u: np.ndarray, envelope: BarrierEnvelope) -> np.ndarray:
    """Explicit post-processing step clipping the solution into the
    envelope; callers must surface that it ran."""
    return np.minimum(np.maximum(u, envelope.lower), envelope.upper)


def convexity_1d(u: np.ndarray, grid: Grid1D) -> float:
    """Fraction of interior points with positive second difference."""
    if grid.n < 5:
        raise ValueError("need at least 5 points for the convexity check")
    d2u = second_difference_1d(u, grid)[1:-1]
    return float(np.mean(d2u > 0.0))


def convexity_2d(u: np.ndarray, grid: Grid2D, radius_cut: float = np.sqrt(0.85)) -> float:
    """Fraction of points with positive Hessian minimum eigenvalue inside
    r < radius_cut (default r^2 < 0.85)."""
    lam_min = hessian_min_eigenvalue_2d(u, grid)
    inside = grid.radius_sq() < radius_cut**2
    return float(np.mean(lam_min[inside] > 0.0))


def optimal_drift_1d(spec: ProblemSpec, grid: Grid1D, u: np.ndarray) -> tuple[np.ndarray, int]:
    """Feedback drift -b(x) h'(|u'|) sign(u'); non-finite entries zeroed."""
    v = defining_function(grid)
    du = gradient_1d(u, grid)
    xi = -weight_b(spec, v) * hamiltonian_prime(spec, np.abs(du)) * np.sign(du)
    return _zero_nonfinite(xi)


def optimal_drift_2d(
    spec: ProblemSpec, grid: Grid2D, u: np.ndarray
) -> tuple[np.ndarray, np.ndarray, int]:
    """Feedback drift -b h'(|grad u|) grad u / |grad u|, zero where the
    gradient vanishes; non-finite entries zeroed."""
    v = defining_function(grid)
    d1, d2 = gradient_2d(u, grid)
    g = np.sqrt(d1**2 + d2**2)
    safe_g = np.where(g > 0.0, g, 1.0)
    scale = -weight_b(spec, v) * hamiltonian_prime(spec, g) / safe_g
    scale = np.where(g > 0.0, scale, 0.0)
    xi1, n1 = _zero_nonfinite(scale * d1)
    xi2, n2 = _zero_nonfinite(scale * d2)
    return xi1, xi2, n1 + n2


def fit_powerlaw_samples(d: np.ndarray, u: np.ndarray, window: tuple[float, float]) -> FitResult:
    """OLS on (log d, log u) restricted to d in the window."""
    d_min, d_max = window
    mask = (d > d_min) & (d < d_max)
    if np.count_nonzero(mask) < 3:
        raise ValueError(f"fewer than 3 sample points inside window {window}")
    if np.any(u[mask] <= 0):
        raise ValueError("log-log fit needs positive values inside the window")
    return _ols(np.log(d[mask]), np.log(u[mask]), window)


def fit_semilog_samples(d: np.ndarray, u: np.ndarray, window: tuple[float, float]) -> FitResult:
    """OLS on (log(1/d), u) restricted to d in the window."""
    d_min, d_max = window
    mask = (d > d_min) & (d < d_max)
    if np.count_nonzero(mask) < 3:
        raise ValueError(f"fewer than 3 sample points inside window {window}")
    return _ols(np.log(1.0 / d[mask]), u[mask], window)


def _ols(xs: np.ndarray, ys: np.ndarray, window: tuple[float, float]) -> FitResult:
    if np.ptp(ys) == 0.0 or np.ptp(xs) == 0.0:
        # degenerate data: slope 0, r^2 reported as 0 by convention
        warnings.warn("degenerate fit data; reporting slope 0 with r^2 = 0", RuntimeWarning, stacklevel=3)
        return FitResult(0.0, float(np.mean(ys)), 0.0, window, xs.size)
    res = linregress(xs, ys)
    return FitResult(
        slope=float(res.slope),
        intercept=float(res.intercept),
        r_squared=float(res.rvalue**2),
        window=window,
        point_count=xs.size,
    )


def powerlaw_fit(u: np.ndarray, grid: Grid1D, window: tuple[float, float] = (0.01, 0.3)) -> FitResult:
    return fit_powerlaw_samples(grid.boundary_distance(), u, window)


def semilog_fit(u: np.ndarray, grid: Grid1D, window: tuple[float, float] = (0.01, 0.3)) -> FitResult:
    return fit_semilog_samples(grid.boundary_distance(), u, window)


def radial_slice(u: np.ndarray, grid: Grid2D) -> tuple[np.ndarray, np.ndarray]:
    """(x1, u) along the x2 = 0 gridline (nearest row for even grids)."""
    mid = grid.n_per_axis // 2
    return grid.axis.copy(), u[:, mid].copy()
