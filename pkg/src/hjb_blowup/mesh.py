"""Grids, defining-function evaluation, and finite-difference stencils.

Fields are plain float64 ndarrays defined on a Grid1D or Grid2D; 2D
fields live on the full tensor grid with the grid's interior mask
selecting the computational points.  Every producing operation in this
package keeps fields finite; `ensure_finite` is the shared guard.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid1D",
    "Grid2D",
    "ensure_finite",
    "defining_function",
    "gradient_1d",
    "second_difference_1d",
    "gradient_2d",
    "laplacian_2d",
    "hessian_min_eigenvalue_2d",
]

V_FLOOR_1D = 1e-6
V_FLOOR_2D = 1e-10


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on the truncated interval [-L+delta, L-delta]."""

    n: int
    L: float = 1.0
    delta: float = 0.05
    v_floor: float = V_FLOOR_1D
    x: np.ndarray = field(init=False, repr=False, compare=False)
    dx: float = field(init=False)

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"need at least 3 points, got {self.n}")
        if not 0 < self.delta < self.L:
            raise ValueError(f"need 0 < delta < L, got delta={self.delta}, L={self.L}")
        x = np.linspace(-self.L + self.delta, self.L - self.delta, self.n)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "dx", float(x[1] - x[0]))

    @property
    def v_boundary(self) -> float:
        """Defining-function value at the truncation edge."""
        return max(1.0 - (self.L - self.delta) ** 2, self.v_floor)

    def boundary_distance(self) -> np.ndarray:
        """d(x) = min(L + x, L - x), distance to the untruncated boundary."""
        return np.minimum(self.L + self.x, self.L - self.x)


@dataclass(frozen=True)
class Grid2D:
    """Tensor grid on [-1, 1]^2 masked to the truncated unit disk."""

    n_per_axis: int
    delta: float = 0.05
    v_floor: float = V_FLOOR_2D
    x1: np.ndarray = field(init=False, repr=False, compare=False)
    x2: np.ndarray = field(init=False, repr=False, compare=False)
    dx: float = field(init=False)
    interior_mask: np.ndarray = field(init=False, repr=False, compare=False)
    boundary_band: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_per_axis < 3:
            raise ValueError(f"need at least 3 points per axis, got {self.n_per_axis}")
        if not 0 < self.delta < 1:
            raise ValueError(f"need 0 < delta < 1, got {self.delta}")
        axis = np.linspace(-1.0, 1.0, self.n_per_axis)
        X1, X2 = np.meshgrid(axis, axis, indexing="ij")
        r2 = X1**2 + X2**2
        object.__setattr__(self, "x1", X1)
        object.__setattr__(self, "x2", X2)
        object.__setattr__(self, "dx", float(axis[1] - axis[0]))
        object.__setattr__(self, "interior_mask", r2 < (1.0 - self.delta) ** 2)
        object.__setattr__(self, "boundary_band", (r2 >= (1.0 - self.delta) ** 2) & (r2 < 1.0))

    @property
    def axis(self) -> np.ndarray:
        return self.x1[:, 0]

    @property
    def v_boundary(self) -> float:
        return max(1.0 - (1.0 - self.delta) ** 2, self.v_floor)

    def radius_sq(self) -> np.ndarray:
        return self.x1**2 + self.x2**2

    def boundary_distance(self) -> np.ndarray:
        """d(x) = 1 - |x|, distance to the unit circle."""
        return 1.0 - np.sqrt(self.radius_sq())


def ensure_finite(values: np.ndarray, name: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        bad = int(np.count_nonzero(~np.isfinite(values)))
        raise FloatingPointError(f"{name} contains {bad} non-finite entries")
    return values


def defining_function(grid: Grid1D | Grid2D) -> np.ndarray:
    """v = 1 - x^2 (1D) or 1 - |x|^2 (2D), clamped below at the grid's
    floor so the singular weights stay finite."""
    if isinstance(grid, Grid1D):
        v = 1.0 - grid.x**2
    else:
        v = 1.0 - grid.radius_sq()
    return np.maximum(v, grid.v_floor)


def gradient_1d(values: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Centered differences in the interior, one-sided first order at the
    two endpoints (np.gradient convention)."""
    return np.gradient(values, grid.dx)


def second_difference_1d(values: np.ndarray, grid: Grid1D, boundary_value: float | None = None) -> np.ndarray:
    """Standard 3-point second difference.

    The endpoints use the Dirichlet ghost value when given (the same
    coupling the implicit solver folds into its right-hand side);
    otherwise they report 0 and callers mask them out.
    """
    dx2 = grid.dx**2
    out = np.zeros_like(values)
    out[1:-1] = (values[2:] - 2.0 * values[1:-1] + values[:-2]) / dx2
    if boundary_value is not None:
        out[0] = (values[1] - 2.0 * values[0] + boundary_value) / dx2
        out[-1] = (boundary_value - 2.0 * values[-1] + values[-2]) / dx2
    return out


def gradient_2d(values: np.ndarray, grid: Grid2D) -> tuple[np.ndarray, np.ndarray]:
    """Centered differences per axis; the outermost rows/columns report 0
    and are never inside the interior mask."""
    dx = grid.dx
    d1 = np.zeros_like(values)
    d2 = np.zeros_like(values)
    d1[1:-1, :] = (values[2:, :] - values[:-2, :]) / (2.0 * dx)
    d2[:, 1:-1] = (values[:, 2:] - values[:, :-2]) / (2.0 * dx)
    return d1, d2


def laplacian_2d(values: np.ndarray, grid: Grid2D) -> np.ndarray:
    """5-point stencil on the inner block; outermost ring reports 0."""
    dx2 = grid.dx**2
    out = np.zeros_like(values)
    out[1:-1, 1:-1] = (
        values[2:, 1:-1]
        + values[:-2, 1:-1]
        + values[1:-1, 2:]
        + values[1:-1, :-2]
        - 4.0 * values[1:-1, 1:-1]
    ) / dx2
    return out


def hessian_min_eigenvalue_2d(values: np.ndarray, grid: Grid2D) -> np.ndarray:
    """Smaller eigenvalue of the 2x2 numerical Hessian at each point.

    Diagonal entries use 3-point second differences, the mixed entry the
    four-corner formula; the discriminant is clamped at zero before the
    square root.  Rim points report 0.
    """
    dx2 = grid.dx**2
    d11 = np.zeros_like(values)
    d22 = np.zeros_like(values)
    d12 = np.zeros_like(values)
    d11[1:-1, :] = (values[2:, :] - 2.0 * values[1:-1, :] + values[:-2, :]) / dx2
    d22[:, 1:-1] = (values[:, 2:] - 2.0 * values[:, 1:-1] + values[:, :-2]) / dx2
    d12[1:-1, 1:-1] = (
        values[2:, 2:] - values[2:, :-2] - values[:-2, 2:] + values[:-2, :-2]
    ) / (4.0 * dx2)
    trace = d11 + d22
    det = d11 * d22 - d12**2
    disc = np.maximum(trace**2 - 4.0 * det, 0.0)
    return (trace - np.sqrt(disc)) / 2.0
