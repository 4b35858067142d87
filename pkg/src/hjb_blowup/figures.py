"""Figure rendering for the report path.

Every experiment writes its data as CSV first; these helpers render the
matching PNG panels next to them.  matplotlib is imported lazily so the
library works (and tests run) without touching a display stack.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

__all__ = [
    "render_regime_comparison",
    "render_scale_analysis",
    "render_verification_1d",
    "render_solution_1d",
    "render_surface_2d",
    "render_verification_2d",
    "render_simulation",
]

_PNG_META = {"Software": "hjb-blowup"}


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_PNG_META)
    _plt().close(fig)


def render_regime_comparison(path: Path, cases: list[dict]) -> None:
    """Overlay of the solution profiles for the three regimes."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(8, 5.5))
    for case in cases:
        ax.plot(case["x"], case["u"], label=case["label"])
    ax.set_xlabel("x")
    ax.set_ylabel("u(x)")
    ax.set_title("Boundary blow-up profiles by regime")
    ax.legend()
    ax.grid(alpha=0.3)
    _save(fig, path)


def render_scale_analysis(path: Path, power: dict, semilog: dict) -> None:
    """Four panels: log-log fit, power profile, semilog fit, gradients."""
    plt = _plt()
    fig, axes = plt.subplots(2, 2, figsize=(11, 8))

    ax = axes[0, 0]
    ax.loglog(power["d"], power["u"], "b-", lw=2, label="numerical")
    fit = power["fit"]
    d_line = np.logspace(np.log10(power["d"].min()), np.log10(power["d"].max()), 50)
    ax.loglog(d_line, np.exp(fit.intercept) * d_line**fit.slope, "r--", lw=2,
              label=f"fit slope {fit.slope:.3f}")
    ax.set_xlabel("distance d(x)")
    ax.set_ylabel("u")
    ax.set_title(f"log-log fit (r$^2$ = {fit.r_squared:.4f})")
    ax.legend()
    ax.grid(alpha=0.3)

    ax = axes[0, 1]
    ax.plot(power["x"], power["u_full"], "b-", lw=2)
    ax.set_xlabel("x")
    ax.set_ylabel("u(x)")
    ax.set_title("power-regime profile")
    ax.grid(alpha=0.3)

    ax = axes[1, 0]
    log_inv = np.log(1.0 / semilog["d"])
    ax.plot(log_inv, semilog["u"], "g-", lw=2, label="numerical")
    fit = semilog["fit"]
    line = np.linspace(log_inv.min(), log_inv.max(), 50)
    ax.plot(line, fit.slope * line + fit.intercept, "r--", lw=2,
            label=f"fit slope {fit.slope:.3f}")
    ax.set_xlabel("log(1/d)")
    ax.set_ylabel("u")
    ax.set_title(f"semilog fit (r$^2$ = {fit.r_squared:.4f})")
    ax.legend()
    ax.grid(alpha=0.3)

    ax = axes[1, 1]
    ax.semilogy(power["x"], np.abs(power["du"]) + 1e-16, "b-", lw=2, label="power case |u'|")
    ax.semilogy(semilog["x"], np.abs(semilog["du"]) + 1e-16, "g-", lw=2, label="log case |u'|")
    ax.set_xlabel("x")
    ax.set_ylabel("|u'|")
    ax.set_title("gradient magnitudes")
    ax.legend()
    ax.grid(alpha=0.3)
    _save(fig, path)


def render_verification_1d(path: Path, x, u, lower, upper, d2u, xi, abs_resid) -> None:
    """Barriers, convexity, drift, and residual panels."""
    plt = _plt()
    fig, axes = plt.subplots(2, 2, figsize=(11, 8))

    ax = axes[0, 0]
    ax.fill_between(x, lower, upper, color="lightgray", alpha=0.5)
    ax.plot(x, u, "k-", lw=2, label="solution")
    ax.plot(x, upper, "r--", label="upper barrier")
    ax.plot(x, lower, "b--", label="lower barrier")
    ax.set_yscale("log")
    ax.set_title("(a) solution vs barriers")
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)

    ax = axes[0, 1]
    ax.plot(x, d2u, "b-")
    ax.axhline(0.0, color="red", ls="--")
    ax.set_title("(b) second derivative")
    ax.set_xlabel("x")
    ax.set_ylabel("u''")
    ax.grid(alpha=0.3)

    ax = axes[1, 0]
    ax.plot(x, xi, color="purple")
    ax.axhline(0.0, color="gray")
    ax.set_title("(c) feedback drift")
    ax.set_xlabel("x")
    ax.set_ylabel("xi(x)")
    ax.grid(alpha=0.3)

    ax = axes[1, 1]
    ax.semilogy(x, abs_resid + 1e-16, "b-")
    ax.axhline(1e-6, color="red", ls="--", label="1e-6")
    ax.set_title("(d) equation residual")
    ax.set_xlabel("x")
    ax.set_ylabel("|residual|")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    _save(fig, path)


def render_solution_1d(path: Path, x, u, title: str = "solution profile") -> None:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(8, 5))
    ax.plot(x, u, "b-", lw=2)
    ax.set_xlabel("x")
    ax.set_ylabel("u(x)")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    _save(fig, path)


def render_surface_2d(path: Path, grid, u, cap_quantile: float = 95.0) -> None:
    """Surface and contour panels of the masked field."""
    plt = _plt()
    u_plot = np.where(grid.radius_sq() >= 0.95, np.nan, u)
    fig = plt.figure(figsize=(12, 5.5))

    ax1 = fig.add_subplot(1, 2, 1, projection="3d")
    ax1.plot_surface(
        grid.x1, grid.x2, np.where(np.isnan(u_plot), 0.0, u_plot),
        cmap="viridis", alpha=0.85, rstride=2, cstride=2,
    )
    ax1.set_xlabel("x1")
    ax1.set_ylabel("x2")
    ax1.set_title("(a) value surface")

    ax2 = fig.add_subplot(1, 2, 2)
    levels = np.linspace(np.nanmin(u_plot), np.nanpercentile(u_plot, cap_quantile), 20)
    cs = ax2.contourf(grid.x1, grid.x2, u_plot, levels=levels, cmap="viridis")
    fig.colorbar(cs, ax=ax2, label="u")
    theta = np.linspace(0.0, 2.0 * np.pi, 100)
    ax2.plot(np.cos(theta), np.sin(theta), "r-", lw=2)
    ax2.set_xlabel("x1")
    ax2.set_ylabel("x2")
    ax2.set_title("(b) contours")
    ax2.set_aspect("equal")
    _save(fig, path)


def render_verification_2d(path: Path, grid, xi1, xi2, slice_x, slice_u, barrier_u, lam_min) -> None:
    """Drift quiver, radial slice vs barrier, and convexity panels."""
    plt = _plt()
    fig, axes = plt.subplots(1, 3, figsize=(15, 4.8))
    r2 = grid.radius_sq()
    theta = np.linspace(0.0, 2.0 * np.pi, 100)

    ax = axes[0]
    skip = max(grid.n_per_axis // 18, 1)
    pick = np.zeros_like(r2, dtype=bool)
    pick[::skip, ::skip] = True
    pick &= r2 < 0.85
    ax.quiver(grid.x1[pick], grid.x2[pick], xi1[pick], xi2[pick], color="purple", alpha=0.7)
    ax.plot(np.cos(theta), np.sin(theta), "r-", lw=2)
    ax.set_title("(a) feedback drift")
    ax.set_aspect("equal")

    ax = axes[1]
    ax.plot(slice_x, slice_u, "b-", lw=2, label="radial slice")
    ax.plot(slice_x, barrier_u, "r--", lw=2, label="critical barrier")
    ax.set_yscale("log")
    ax.set_xlabel("x1 (x2 = 0)")
    ax.set_ylabel("u")
    ax.set_title("(b) slice vs barrier")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)

    ax = axes[2]
    lam_plot = np.where(r2 >= 0.9, np.nan, lam_min)
    im = ax.pcolormesh(grid.x1, grid.x2, lam_plot, cmap="RdYlGn", shading="auto")
    fig.colorbar(im, ax=ax, label="min Hessian eigenvalue")
    ax.plot(np.cos(theta), np.sin(theta), "k-", lw=2)
    ax.set_title("(c) convexity indicator")
    ax.set_aspect("equal")
    _save(fig, path)


def render_simulation(path: Path, costs: np.ndarray, u_at_start: float) -> None:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(8, 5))
    ax.hist(costs, bins=40, color="steelblue", alpha=0.8)
    ax.axvline(u_at_start, color="red", ls="--", lw=2, label="u(start)")
    ax.axvline(float(np.mean(costs)), color="black", lw=2, label="cost mean")
    ax.set_xlabel("discounted path cost")
    ax.set_ylabel("paths")
    ax.set_title("Monte Carlo cost vs solved value")
    ax.legend()
    ax.grid(alpha=0.3)
    _save(fig, path)
