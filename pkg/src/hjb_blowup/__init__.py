"""Solver and verification toolkit for boundary blow-up HJB problems."""

from .model import (
    AsymptoticConstants,
    ProblemSpec,
    Regime,
    RegimeKind,
    UnsupportedRegimeError,
    classify_regime,
    conjugate,
    critical_constant,
    hamiltonian,
    hamiltonian_prime,
    weight_a,
    weight_b,
    xi_bounds,
)
from .mesh import Grid1D, Grid2D, defining_function
from .solver import (
    NumericalDivergenceError,
    SolveReport,
    SolverConfig,
    boundary_value,
    solve_1d,
    solve_2d,
    subsolution_init,
    verification_config_1d,
    verification_config_2d,
)
from .control import SimConfig, TrajectoryBatch, simulate, discounted_cost, verify_value

__version__ = "0.1.0"

__all__ = [
    "AsymptoticConstants",
    "ProblemSpec",
    "Regime",
    "RegimeKind",
    "UnsupportedRegimeError",
    "classify_regime",
    "conjugate",
    "critical_constant",
    "hamiltonian",
    "hamiltonian_prime",
    "weight_a",
    "weight_b",
    "xi_bounds",
    "Grid1D",
    "Grid2D",
    "defining_function",
    "NumericalDivergenceError",
    "SolveReport",
    "SolverConfig",
    "boundary_value",
    "solve_1d",
    "solve_2d",
    "subsolution_init",
    "verification_config_1d",
    "verification_config_2d",
    "SimConfig",
    "TrajectoryBatch",
    "simulate",
    "discounted_cost",
    "verify_value",
    "__version__",
]
