"""Problem parameterization, regime classification, and closed-form constants.

The equation under study is

    -u'' (or -Laplacian u) + b(x) h(|grad u|) + a(x) u = f

on a truncated interval or disk, with power weights a = v^alpha,
b = b0 * v^beta built from the defining function v (1 - x^2 in 1D,
1 - |x|^2 in 2D) and Hamiltonian h(s) = l0 * s^q.  Solutions blow up at
the domain boundary; the blow-up profile is governed by the exponent

    gamma = (beta - q + 2) / (q - 1)

when the gradient term balances the diffusion (q < beta + 2), degrades
to a logarithm at q = beta + 2, and has no finite barrier constant for
q > beta + 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

__all__ = [
    "ProblemSpec",
    "RegimeKind",
    "Regime",
    "AsymptoticConstants",
    "UnsupportedRegimeError",
    "classify_regime",
    "critical_constant",
    "xi_bounds",
    "hamiltonian",
    "hamiltonian_prime",
    "conjugate",
    "weight_a",
    "weight_b",
]


class UnsupportedRegimeError(Exception):
    """Raised when an operation needs a finite barrier constant and the
    regime does not provide one (high-order regime, or a log-regime call
    to a power-law-only operation)."""


@dataclass(frozen=True)
class ProblemSpec:
    """Full parameterization of the equation.

    q            gradient exponent (> 1; the experiments also use q > 2)
    beta         weight-singularity exponent of b, >= 0
    alpha        reaction exponent of a, > -2
    f_level      constant source value, >= 0
    b0           amplitude of the b-weight, > 0
    l0           amplitude of the Hamiltonian, > 0
    grad_scale_m boundary gradient magnitude of the defining function;
                 2 for v = 1 - x^2 (|grad v| = 2 on the boundary)
    """

    q: float
    beta: float
    alpha: float = -0.2
    f_level: float = 1.0
    b0: float = 1.0
    l0: float = 1.0
    grad_scale_m: float = 2.0

    def __post_init__(self):
        if not self.q > 1:
            raise ValueError(f"q must exceed 1, got {self.q}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if not self.alpha > -2:
            raise ValueError(f"alpha must exceed -2, got {self.alpha}")
        if self.f_level < 0:
            raise ValueError(f"f_level must be >= 0, got {self.f_level}")
        if not self.b0 > 0:
            raise ValueError(f"b0 must be positive, got {self.b0}")
        if not self.l0 > 0:
            raise ValueError(f"l0 must be positive, got {self.l0}")
        if not self.grad_scale_m > 0:
            raise ValueError(f"grad_scale_m must be positive, got {self.grad_scale_m}")


class RegimeKind(Enum):
    GRADIENT_DOMINANT = "gradient-dominant"
    CRITICAL_LOGARITHMIC = "critical-logarithmic"
    HIGH_ORDER = "high-order"


@dataclass(frozen=True)
class Regime:
    """Asymptotic regime with its blow-up exponent.

    gamma is the finite positive exponent in the gradient-dominant case,
    0.0 by convention in the critical-logarithmic case, and None in the
    high-order case (no finite barrier).
    """

    kind: RegimeKind
    gamma: float | None


@dataclass(frozen=True)
class AsymptoticConstants:
    """Critical barrier constant and the sharp boundary-trace bounds.

    c_star is the constant the solver and barriers actually use; it
    carries the grad_scale_m factors of the defining function.  xi1,
    xi2, xi0 are the |grad v| = 1 normalized trace bounds; xi0 is the
    exact trace limit when the amplitude limits coincide.
    """

    c_star: float
    xi1: float
    xi2: float
    xi0: float


def _decimal(x: float) -> Fraction:
    # str() gives the shortest repr that round-trips, which recovers the
    # intended decimal for inputs like 1.6 that are not exact binary.
    return Fraction(str(float(x)))


def classify_regime(spec: ProblemSpec, tol: float = 1e-9) -> Regime:
    """Classify (q, beta) into one of the three asymptotic regimes.

    |q - (beta + 2)| <= tol maps to the critical-logarithmic regime.  The
    gradient-dominant exponent gamma = (beta - q + 2)/(q - 1) is computed
    in exact rational arithmetic on the decimal forms of q and beta, so
    e.g. (q, beta) = (1.6, 0.5) yields exactly 1.5.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    excess = spec.q - (spec.beta + 2.0)
    if abs(excess) <= tol:
        return Regime(RegimeKind.CRITICAL_LOGARITHMIC, 0.0)
    if excess > 0:
        return Regime(RegimeKind.HIGH_ORDER, None)
    qf, bf = _decimal(spec.q), _decimal(spec.beta)
    gamma = float((bf - qf + 2) / (qf - 1))
    return Regime(RegimeKind.GRADIENT_DOMINANT, gamma)


def raw_gamma(spec: ProblemSpec) -> float:
    """(beta - q + 2)/(q - 1) without regime branching; negative in the
    high-order regime.  Used only by the listing-compat path."""
    qf, bf = _decimal(spec.q), _decimal(spec.beta)
    return float((bf - qf + 2) / (qf - 1))


def critical_constant(spec: ProblemSpec, regime: Regime, *, high_order_compat: bool = False) -> float:
    """Critical barrier constant C*.

    Gradient-dominant: (gamma(gamma+1) m^2 / (b0 l0 (gamma m)^q))^(1/(q-1)),
    which reduces to the |grad v| = 1 form when m = 1.  Critical-log:
    (m^2 / (b0 l0 m^q))^(1/(q-1)).  High-order: no finite constant; with
    high_order_compat=True the gradient-dominant formula is evaluated
    anyway with the (negative) raw exponent, which is finite only when q
    is an integer.
    """
    q, m = spec.q, spec.grad_scale_m
    if regime.kind is RegimeKind.CRITICAL_LOGARITHMIC:
        return (m**2 / (spec.b0 * spec.l0 * m**q)) ** (1.0 / (q - 1.0))
    if regime.kind is RegimeKind.HIGH_ORDER:
        if not high_order_compat:
            raise UnsupportedRegimeError(
                "no finite barrier constant in the high-order regime (q > beta + 2)"
            )
        gamma = raw_gamma(spec)
    else:
        gamma = regime.gamma
    with np.errstate(invalid="ignore"):
        c = np.float64(
            (gamma * (gamma + 1.0) * m**2 / (spec.b0 * spec.l0 * np.float64(gamma * m) ** q))
            ** (1.0 / (q - 1.0))
        )
    if not np.isfinite(c):
        raise UnsupportedRegimeError(
            f"barrier-constant arithmetic is not finite for q={q}, beta={spec.beta}"
        )
    return float(c)


def xi_bounds(
    spec: ProblemSpec,
    b1: float | None = None,
    b2: float | None = None,
    l1: float | None = None,
    l2: float | None = None,
) -> AsymptoticConstants:
    """Sharp boundary-trace bounds xi1 <= xi0 <= xi2.

    xi_i = (gamma(gamma+1) / (b_i l_i gamma^q))^(1/(q-1)) with the
    convention that (b2, l2) give the lower bound xi1.  The amplitude
    bounds default to (b0, l0), collapsing xi1 = xi2 = xi0.  Only defined
    in the gradient-dominant regime.
    """
    regime = classify_regime(spec)
    if regime.kind is not RegimeKind.GRADIENT_DOMINANT:
        raise UnsupportedRegimeError("trace bounds require the gradient-dominant regime")
    b1 = spec.b0 if b1 is None else b1
    b2 = spec.b0 if b2 is None else b2
    l1 = spec.l0 if l1 is None else l1
    l2 = spec.l0 if l2 is None else l2
    if not (0 < b1 <= b2):
        raise ValueError(f"need 0 < b1 <= b2, got b1={b1}, b2={b2}")
    if not (0 < l1 <= l2):
        raise ValueError(f"need 0 < l1 <= l2, got l1={l1}, l2={l2}")
    g, q = regime.gamma, spec.q

    def xi(bb: float, ll: float) -> float:
        return (g * (g + 1.0) / (bb * ll * g**q)) ** (1.0 / (q - 1.0))

    return AsymptoticConstants(
        c_star=critical_constant(spec, regime),
        xi1=xi(b2, l2),
        xi2=xi(b1, l1),
        xi0=xi(spec.b0, spec.l0),
    )


def hamiltonian(spec: ProblemSpec, s):
    """h(s) = l0 * s^q for s >= 0."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("hamiltonian argument must be nonnegative")
    return spec.l0 * s**spec.q


def hamiltonian_prime(spec: ProblemSpec, s):
    """h'(s) = l0 * q * s^(q-1) for s >= 0."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("hamiltonian argument must be nonnegative")
    return spec.l0 * spec.q * s ** (spec.q - 1.0)


def conjugate(spec: ProblemSpec, s):
    """Convex conjugate h*(s) = sup_{t>=0} (s t - l0 t^q).

    Closed form (q-1) * l0 * (s/(q l0))^(q/(q-1)); h*(0) = 0.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("conjugate argument must be nonnegative")
    q, l0 = spec.q, spec.l0
    return (q - 1.0) * l0 * (s / (q * l0)) ** (q / (q - 1.0))


def weight_a(spec: ProblemSpec, v):
    """Reaction weight a = v^alpha, v > 0."""
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0):
        raise ValueError("weight argument v must be positive (clamp upstream)")
    return v**spec.alpha


def weight_b(spec: ProblemSpec, v):
    """Gradient weight b = b0 * v^beta, v > 0."""
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0):
        raise ValueError("weight argument v must be positive (clamp upstream)")
    return spec.b0 * v**spec.beta


def barrier_polynomial(spec: ProblemSpec, regime: Regime, c):
    """P(C) = b0 l0 gamma^q C^q - gamma(gamma+1) C, whose positive root is
    the m=1 critical constant.  Diagnostic helper for root checks."""
    if regime.kind is not RegimeKind.GRADIENT_DOMINANT:
        raise UnsupportedRegimeError("barrier polynomial requires the gradient-dominant regime")
    g, q = regime.gamma, spec.q
    c = np.asarray(c, dtype=float)
    return spec.b0 * spec.l0 * g**q * c**q - g * (g + 1.0) * c


def exponent_balance(spec: ProblemSpec, gamma: float) -> float:
    """beta - q(gamma+1) + gamma + 2; zero at the blow-up exponent."""
    return spec.beta - spec.q * (gamma + 1.0) + gamma + 2.0
