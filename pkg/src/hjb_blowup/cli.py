"""Command-line front end.

Subcommands: constants, regimes, solve1d, solve2d, analyze, verify,
simulate.  Configuration comes from an optional YAML file plus flag
overrides (flags win); every effective knob is echoed into the run's
summary JSON.  Exit codes: 0 success, 2 configuration error, 3 numerical
divergence, 4 unsupported regime.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from . import diagnostics as diag
from . import figures, serialize
from .control import SimConfig, simulate, verify_value
from .mesh import Grid1D, Grid2D, second_difference_1d
from .model import (
    ProblemSpec,
    RegimeKind,
    UnsupportedRegimeError,
    classify_regime,
    critical_constant,
    xi_bounds,
)
from .solver import (
    NumericalDivergenceError,
    SolverConfig,
    DEFAULTS_2D,
    solve_1d,
    solve_2d,
    verification_config_1d,
    verification_config_2d,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_REGIME = 4

OUTDIR_ENV = "HJB_BLOWUP_OUTDIR"


@dataclass(frozen=True)
class GridSettings:
    dimension: int = 1
    n: int = 400
    delta: float = 0.05
    L: float = 1.0

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")

    def build(self):
        if self.dimension == 1:
            return Grid1D(n=self.n, L=self.L, delta=self.delta)
        return Grid2D(n_per_axis=self.n, delta=self.delta)


@dataclass(frozen=True)
class OutputSettings:
    directory: str = "out"
    figures: bool = True
    per_path_csv: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    problem: ProblemSpec
    grid: GridSettings = GridSettings()
    solver: SolverConfig = SolverConfig()
    sim: SimConfig = SimConfig()
    outputs: OutputSettings = OutputSettings()


def config_to_dict(cfg: ExperimentConfig) -> dict:
    d = {
        "problem": asdict(cfg.problem),
        "grid": asdict(cfg.grid),
        "solver": asdict(cfg.solver),
        "sim": asdict(cfg.sim),
        "outputs": asdict(cfg.outputs),
    }
    d["sim"]["start_point"] = list(cfg.sim.start_point)
    return d


def config_from_dict(data: dict) -> ExperimentConfig:
    data = dict(data or {})
    unknown = set(data) - {"problem", "grid", "solver", "sim", "outputs"}
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    problem = data.get("problem")
    if not problem or "q" not in problem or "beta" not in problem:
        raise ValueError("config must provide problem.q and problem.beta")
    sim_data = dict(data.get("sim", {}))
    if "start_point" in sim_data and not isinstance(sim_data["start_point"], (int, float)):
        sim_data["start_point"] = tuple(float(v) for v in sim_data["start_point"])
    return ExperimentConfig(
        problem=ProblemSpec(**problem),
        grid=GridSettings(**data.get("grid", {})),
        solver=SolverConfig(**data.get("solver", {})),
        sim=SimConfig(**sim_data),
        outputs=OutputSettings(**data.get("outputs", {})),
    )


def emit_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=True)


def load_config_file(path: str) -> dict:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must contain a mapping")
    return data


# ---------------------------------------------------------------------------
# argument parsing

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML config file; flags override its values")
    p.add_argument("--q", type=float, help="gradient exponent")
    p.add_argument("--beta", type=float, help="weight singularity exponent")
    p.add_argument("--alpha", type=float, help="reaction exponent")
    p.add_argument("--f-level", type=float, help="constant source value")
    p.add_argument("--b0", type=float, help="gradient-weight amplitude")
    p.add_argument("--l0", type=float, help="Hamiltonian amplitude")
    p.add_argument("--n", type=int, help="grid points (per axis in 2D)")
    p.add_argument("--delta", type=float, help="boundary truncation")
    p.add_argument("--domain-half-width", type=float, dest="L", help="1D half-width L")
    p.add_argument("--output-dir", help=f"output directory (default $({OUTDIR_ENV}) or ./out)")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    p.add_argument("--max-iter", type=int, help="iteration cap")
    p.add_argument("--tol", type=float, help="relative-change stopping threshold")
    p.add_argument("--damping", type=float, help="weight on the new iterate, (0, 1]")
    p.add_argument("--lambda-factor", type=float, help="iteration-weight multiplier")
    p.add_argument("--grad-clip", type=float, help="gradient clip bound")
    p.add_argument("--init-mode", choices=["boundary-constant", "subsolution"])
    p.add_argument("--deep", action="store_true",
                   help="use the deep verification solver preset as the base config")
    p.add_argument("--high-order-compat", action="store_true",
                   help="evaluate the high-order regime with the raw-exponent arithmetic "
                        "(theory-unsupported)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hjb-blowup",
        description="Solver and verification toolkit for boundary blow-up HJB problems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, desc in [
        ("constants", "print regime, blow-up exponent, and barrier constants"),
        ("regimes", "solve and tabulate the three-regime comparison"),
        ("solve1d", "solve the 1D truncated-interval problem"),
        ("solve2d", "solve the 2D masked-disk problem"),
        ("analyze", "scaling fits for the power and logarithmic regimes"),
        ("verify", "full diagnostic battery on a converged solution"),
        ("simulate", "Monte Carlo audit of the feedback control"),
    ]:
        p = sub.add_parser(name, help=desc)
        _add_common(p)
        if name == "solve1d":
            p.add_argument("--sweep", help="comma-separated q values solved concurrently")
        if name == "analyze":
            p.add_argument("--window-min", type=float, default=0.01)
            p.add_argument("--window-max", type=float, default=0.3)
        if name == "verify":
            p.add_argument("--dimension", type=int, choices=[1, 2])
            p.add_argument("--clamp", action="store_true",
                           help="clip the solution into the barrier envelope before diagnostics")
            p.add_argument("--window-min", type=float, default=0.01)
            p.add_argument("--window-max", type=float, default=0.3)
        if name == "simulate":
            p.add_argument("--horizon", type=float, help="simulated time span")
            p.add_argument("--dt", type=float, help="Euler step")
            p.add_argument("--n-paths", type=int, help="ensemble size")
            p.add_argument("--seed", type=int, help="RNG seed")
            p.add_argument("--start", type=float, nargs="+", help="initial state coordinates")
            p.add_argument("--reflect-clip", type=float, help="exit distance threshold")
            p.add_argument("--drift-scale", type=float, default=1.0,
                           help="drift multiplier (0 = uncontrolled diffusion)")
            p.add_argument("--per-path-csv", action="store_true")
    return parser


def _merge_config(args: argparse.Namespace) -> ExperimentConfig:
    file_data = load_config_file(args.config) if args.config else {}

    problem = dict(file_data.get("problem", {}))
    for key, attr in [("q", "q"), ("beta", "beta"), ("alpha", "alpha"),
                      ("f_level", "f_level"), ("b0", "b0"), ("l0", "l0")]:
        val = getattr(args, attr, None)
        if val is not None:
            problem[key] = val
    if "q" not in problem or "beta" not in problem:
        raise ValueError("q and beta are required (flags or config file)")

    grid = dict(file_data.get("grid", {}))
    if getattr(args, "dimension", None):
        grid["dimension"] = args.dimension
    if args.command == "solve2d":
        grid["dimension"] = 2
        grid.setdefault("n", 100)
    elif args.command == "solve1d":
        grid["dimension"] = 1
    if grid.get("dimension") == 2:
        grid.setdefault("n", 100)
    if args.n is not None:
        grid["n"] = args.n
    if args.delta is not None:
        grid["delta"] = args.delta
    if getattr(args, "L", None) is not None:
        grid["L"] = args.L

    solver = dict(file_data.get("solver", {}))
    if args.deep:
        base = verification_config_1d() if grid.get("dimension", 1) == 1 else verification_config_2d()
        solver = {**asdict(base), **solver}
    elif grid.get("dimension", 1) == 2 and "max_iter" not in solver:
        solver = {**asdict(DEFAULTS_2D), **solver}
    for key, attr in [("max_iter", "max_iter"), ("tol", "tol"), ("damping", "damping"),
                      ("lambda_factor", "lambda_factor"), ("grad_clip", "grad_clip"),
                      ("init_mode", "init_mode")]:
        val = getattr(args, attr, None)
        if val is not None:
            solver[key] = val

    sim = dict(file_data.get("sim", {}))
    for key, attr in [("horizon_t", "horizon"), ("dt", "dt"), ("n_paths", "n_paths"),
                      ("seed", "seed"), ("reflect_clip", "reflect_clip")]:
        val = getattr(args, attr, None)
        if val is not None:
            sim[key] = val
    if getattr(args, "start", None) is not None:
        sim["start_point"] = tuple(args.start)
    elif "start_point" in sim and not isinstance(sim["start_point"], (int, float)):
        sim["start_point"] = tuple(float(v) for v in sim["start_point"])
    if grid.get("dimension", 1) == 2 and "start_point" not in sim:
        sim["start_point"] = (0.0, 0.0)

    outputs = dict(file_data.get("outputs", {}))
    if args.output_dir is not None:
        outputs["directory"] = args.output_dir
    elif "directory" not in outputs:
        outputs["directory"] = os.environ.get(OUTDIR_ENV, "out")
    if args.no_figures:
        outputs["figures"] = False

    return ExperimentConfig(
        problem=ProblemSpec(**problem),
        grid=GridSettings(**grid),
        solver=SolverConfig(**solver),
        sim=SimConfig(**sim),
        outputs=OutputSettings(**outputs),
    )


def _outdir(cfg: ExperimentConfig) -> Path:
    path = Path(cfg.outputs.directory)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _base_summary(cfg: ExperimentConfig) -> dict:
    spec = cfg.problem
    regime = classify_regime(spec)
    echoed = config_to_dict(cfg)
    # the directory is where the summary lives, not a knob of the run
    echoed["outputs"].pop("directory")
    summary = {
        "config": echoed,
        "regime": regime.kind.value,
        "gamma": regime.gamma,
    }
    if regime.kind is RegimeKind.GRADIENT_DOMINANT:
        consts = xi_bounds(spec)
        summary["c_star"] = consts.c_star
        summary["xi0"] = consts.xi0
    elif regime.kind is RegimeKind.CRITICAL_LOGARITHMIC:
        summary["c_star"] = critical_constant(spec, regime)
        summary["xi0"] = None
    else:
        summary["c_star"] = None
        summary["xi0"] = None
    return summary


# ---------------------------------------------------------------------------
# subcommands

def cmd_constants(cfg: ExperimentConfig, args) -> int:
    spec = cfg.problem
    regime = classify_regime(spec)
    parts = [f"regime={regime.kind.value}"]
    if regime.kind is RegimeKind.GRADIENT_DOMINANT:
        consts = xi_bounds(spec)
        parts += [f"gamma={regime.gamma:g}", f"c_star={consts.c_star:.10g}",
                  f"xi0={consts.xi0:.10g}"]
    elif regime.kind is RegimeKind.CRITICAL_LOGARITHMIC:
        parts += ["gamma=0", f"c_star={critical_constant(spec, regime):.10g}"]
    elif args.high_order_compat:
        c = critical_constant(spec, regime, high_order_compat=True)
        parts += [f"c_star_compat={c:.10g}", "theory_supported=false"]
    else:
        parts += ["note=no finite barrier constant (q > beta + 2)"]
    print(" ".join(parts))
    return EXIT_OK


def cmd_regimes(cfg: ExperimentConfig, args) -> int:
    """Three-regime comparison at the configured beta: the power case
    (configured q when gradient-dominant, else 1.6), the high-order case
    (q = 3.0, raw-exponent compat), and the critical case (q = beta + 2)."""
    beta = cfg.problem.beta
    base = cfg.problem
    if classify_regime(base).kind is not RegimeKind.GRADIENT_DOMINANT:
        base = replace(base, q=1.6)
    cases = [
        ("gradient-dominant", base, False),
        ("high-order", replace(cfg.problem, q=3.0), True),
        ("critical-logarithmic", replace(cfg.problem, q=beta + 2.0), False),
    ]
    grid = Grid1D(n=cfg.grid.n, L=cfg.grid.L, delta=cfg.grid.delta)
    outdir = _outdir(cfg)
    rows, fig_cases, case_summaries = [], [], {}
    for label, spec, compat in cases:
        report = solve_1d(spec, grid, cfg.solver, high_order_compat=compat)
        regime = classify_regime(spec)
        rows.append((label, spec.q, report))
        fig_cases.append({"x": grid.x, "u": report.solution,
                          "label": f"{label} (q={spec.q:g})"})
        case_summaries[label] = {
            "q": spec.q,
            "gamma": regime.gamma,
            "boundary_value": report.boundary_value,
            "iterations": report.iterations_used,
            "converged": report.converged,
            "theory_supported": not compat,
        }
    with open(outdir / "regimes.csv", "w", newline="\n") as fh:
        fh.write("case,q,x,u\n")
        for label, qv, report in rows:
            for xi_, ui_ in zip(grid.x, report.solution):
                fh.write(f"{label},{serialize.fmt(qv)},{serialize.fmt(xi_)},{serialize.fmt(ui_)}\n")
    summary = _base_summary(cfg)
    summary["cases"] = case_summaries
    serialize.write_json(outdir / "regimes_summary.json", summary)
    if cfg.outputs.figures:
        figures.render_regime_comparison(outdir / "regimes.png", fig_cases)
    print(f"wrote {outdir / 'regimes.csv'}")
    return EXIT_OK


def cmd_solve1d(cfg: ExperimentConfig, args) -> int:
    if args.sweep:
        return _sweep_1d(cfg, args)
    grid = cfg.grid.build()
    report = solve_1d(cfg.problem, grid, cfg.solver, high_order_compat=args.high_order_compat)
    outdir = _outdir(cfg)
    serialize.write_field_1d(outdir / "solution.csv", grid, report.solution)
    summary = _base_summary(cfg)
    summary.update(
        iterations=report.iterations_used,
        converged=report.converged,
        boundary_value=report.boundary_value,
        final_relative_change=float(report.relative_change_history[-1]),
        solution_min=float(np.min(report.solution)),
    )
    serialize.write_json(outdir / "report.json", summary)
    if cfg.outputs.figures:
        figures.render_solution_1d(outdir / "profile.png", grid.x, report.solution)
    print(f"solved in {report.iterations_used} iterations (converged={report.converged}); "
          f"wrote {outdir / 'solution.csv'}")
    return EXIT_OK


def _sweep_1d(cfg: ExperimentConfig, args) -> int:
    q_values = [float(tok) for tok in args.sweep.split(",") if tok.strip()]
    if not q_values:
        raise ValueError("--sweep needs at least one q value")
    grid = cfg.grid.build()
    outdir = _outdir(cfg)

    def run(qv: float):
        spec = replace(cfg.problem, q=qv)
        report = solve_1d(spec, grid, cfg.solver, high_order_compat=args.high_order_compat)
        sub = outdir / f"sweep_q{qv:g}"
        sub.mkdir(exist_ok=True)
        serialize.write_field_1d(sub / "solution.csv", grid, report.solution)
        return qv, report

    with ThreadPoolExecutor(max_workers=min(len(q_values), os.cpu_count() or 1)) as pool:
        results = list(pool.map(run, q_values))
    summary = _base_summary(cfg)
    summary["sweep"] = {
        f"{qv:g}": {
            "iterations": rep.iterations_used,
            "converged": rep.converged,
            "boundary_value": rep.boundary_value,
            "solution_min": float(np.min(rep.solution)),
        }
        for qv, rep in results
    }
    serialize.write_json(outdir / "sweep.json", summary)
    print(f"swept {len(q_values)} solves; wrote {outdir / 'sweep.json'}")
    return EXIT_OK


def cmd_solve2d(cfg: ExperimentConfig, args) -> int:
    grid = cfg.grid.build()
    report = solve_2d(cfg.problem, grid, cfg.solver)
    outdir = _outdir(cfg)
    serialize.write_field_2d(outdir / "solution2d.csv", grid, report.solution)
    interior = grid.interior_mask
    masked = np.where(interior, report.solution, np.inf)
    imin = np.unravel_index(int(np.argmin(masked)), masked.shape)
    summary = _base_summary(cfg)
    summary.update(
        iterations=report.iterations_used,
        converged=report.converged,
        boundary_value=report.boundary_value,
        final_relative_change=float(report.relative_change_history[-1]),
        minimum_value=float(report.solution[imin]),
        minimum_location=[float(grid.x1[imin]), float(grid.x2[imin])],
    )
    serialize.write_json(outdir / "report.json", summary)
    if cfg.outputs.figures:
        figures.render_surface_2d(outdir / "surface.png", grid, report.solution)
    print(f"solved in {report.iterations_used} sweeps (converged={report.converged}); "
          f"wrote {outdir / 'solution2d.csv'}")
    return EXIT_OK


def cmd_analyze(cfg: ExperimentConfig, args) -> int:
    window = (args.window_min, args.window_max)
    grid = Grid1D(n=cfg.grid.n, L=cfg.grid.L, delta=cfg.grid.delta)
    outdir = _outdir(cfg)

    power_spec = cfg.problem
    if classify_regime(power_spec).kind is not RegimeKind.GRADIENT_DOMINANT:
        raise UnsupportedRegimeError("analyze needs a gradient-dominant base problem")
    log_spec = replace(cfg.problem, q=cfg.problem.beta + 2.0)

    rep_pow = solve_1d(power_spec, grid, cfg.solver)
    rep_log = solve_1d(log_spec, grid, cfg.solver)
    d = grid.boundary_distance()
    fit_pow = diag.powerlaw_fit(rep_pow.solution, grid, window)
    fit_log = diag.semilog_fit(rep_log.solution, grid, window)

    serialize.write_csv(outdir / "analyze_power.csv", ["x", "d", "u"],
                        [grid.x, d, rep_pow.solution])
    serialize.write_csv(outdir / "analyze_log.csv", ["x", "d", "u"],
                        [grid.x, d, rep_log.solution])
    summary = _base_summary(cfg)
    summary["powerlaw_fit"] = asdict(fit_pow)
    summary["semilog_fit"] = asdict(fit_log)
    summary["log_case_q"] = log_spec.q
    serialize.write_json(outdir / "analyze_summary.json", summary)
    if cfg.outputs.figures:
        in_win = (d > window[0]) & (d < window[1])
        figures.render_scale_analysis(
            outdir / "scale_analysis.png",
            power={"x": grid.x, "u_full": rep_pow.solution, "d": d[in_win],
                   "u": rep_pow.solution[in_win], "fit": fit_pow,
                   "du": np.gradient(rep_pow.solution, grid.dx)},
            semilog={"x": grid.x, "d": d[in_win], "u": rep_log.solution[in_win],
                     "fit": fit_log, "du": np.gradient(rep_log.solution, grid.dx)},
        )
    print(f"power-law slope {fit_pow.slope:.4f} (r2={fit_pow.r_squared:.5f}); "
          f"semilog slope {fit_log.slope:.4f} (r2={fit_log.r_squared:.5f})")
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig, args) -> int:
    if cfg.grid.dimension == 2:
        return _verify_2d(cfg, args)
    return _verify_1d(cfg, args)


def _verify_1d(cfg: ExperimentConfig, args) -> int:
    spec = cfg.problem
    grid = Grid1D(n=cfg.grid.n, L=cfg.grid.L, delta=cfg.grid.delta)
    report = solve_1d(spec, grid, cfg.solver)
    envelope = diag.barrier_envelope(spec, grid)
    u = report.solution
    clamped = bool(args.clamp)
    if clamped:
        u = diag.clamp_to_envelope(u, envelope)
    violations = diag.check_barriers(u, envelope.lower, envelope.upper)
    resid, n_zeroed = diag.residual_1d(spec, grid, u, u_bnd=report.boundary_value)
    max_resid = diag.max_residual_1d(spec, grid, u, u_bnd=report.boundary_value)
    convexity = diag.convexity_1d(u, grid)
    drift, _ = diag.optimal_drift_1d(spec, grid, u)
    window = (args.window_min, args.window_max)
    fit = diag.powerlaw_fit(u, grid, window)
    d2u = second_difference_1d(u, grid)

    outdir = _outdir(cfg)
    serialize.write_csv(outdir / "verify_barriers.csv", ["x", "u", "lower", "upper"],
                        [grid.x, u, envelope.lower, envelope.upper])
    serialize.write_csv(outdir / "verify_convexity.csv", ["x", "d2u"], [grid.x, d2u])
    serialize.write_csv(outdir / "verify_drift.csv", ["x", "xi"], [grid.x, drift])
    serialize.write_csv(outdir / "verify_residual.csv", ["x", "abs_residual"],
                        [grid.x, np.abs(resid)])
    summary = _base_summary(cfg)
    summary.update(
        slope=fit.slope,
        r2=fit.r_squared,
        max_residual=max_resid,
        convexity_fraction=convexity,
        barrier_violations=violations,
        clamped=clamped,
        residual_nonfinite_zeroed=n_zeroed,
        iterations=report.iterations_used,
        converged=report.converged,
    )
    serialize.write_json(outdir / "summary.json", summary)
    if cfg.outputs.figures:
        figures.render_verification_1d(outdir / "verification.png", grid.x, u,
                                       envelope.lower, envelope.upper, d2u, drift,
                                       np.abs(resid))
    print(f"max residual {max_resid:.3e}; convexity fraction {convexity:.4f}; "
          f"barrier violations {violations}; slope {fit.slope:.4f} (r2={fit.r_squared:.5f})")
    return EXIT_OK


def _verify_2d(cfg: ExperimentConfig, args) -> int:
    spec = cfg.problem
    grid = Grid2D(n_per_axis=cfg.grid.n, delta=cfg.grid.delta)
    report = solve_2d(spec, grid, cfg.solver)
    u = report.solution
    max_resid = diag.max_residual_2d(spec, grid, u)
    convexity = diag.convexity_2d(u, grid)
    xi1, xi2, _ = diag.optimal_drift_2d(spec, grid, u)
    slice_x, slice_u = diag.radial_slice(u, grid)
    d_slice = 1.0 - np.abs(slice_x)
    window = (args.window_min, args.window_max)
    keep = np.abs(slice_x) < 1.0 - grid.delta
    fit = diag.fit_powerlaw_samples(d_slice[keep], slice_u[keep], window)
    regime = classify_regime(spec)
    c_star = critical_constant(spec, regime)
    v_slice = np.maximum(1.0 - slice_x**2, grid.v_floor)
    barrier_u = c_star * v_slice ** (-regime.gamma)
    lam_min = diag.hessian_min_eigenvalue_2d(u, grid)

    # inward-pointing fraction on the reporting annulus
    r = np.sqrt(grid.radius_sq())
    radial = np.where(r > 0, (xi1 * grid.x1 + xi2 * grid.x2) / np.where(r > 0, r, 1.0), 0.0)
    annulus = grid.interior_mask & (r > 0.3) & (r < 0.85)
    inward_fraction = float(np.mean(radial[annulus] < 0.0))

    outdir = _outdir(cfg)
    serialize.write_field_2d(outdir / "solution2d.csv", grid, u)
    serialize.write_csv(outdir / "slice.csv", ["x1", "u", "barrier"],
                        [slice_x, slice_u, barrier_u])
    serialize.write_csv(
        outdir / "drift2d.csv",
        ["x1", "x2", "xi1", "xi2", "interior"],
        [grid.x1.ravel(), grid.x2.ravel(), xi1.ravel(), xi2.ravel(),
         grid.interior_mask.ravel()],
    )
    serialize.write_csv(outdir / "lambda_min.csv", ["x1", "x2", "lambda_min"],
                        [grid.x1.ravel(), grid.x2.ravel(), lam_min.ravel()])
    envelope = diag.barrier_envelope(spec, grid)
    summary = _base_summary(cfg)
    summary.update(
        slope=fit.slope,
        r2=fit.r_squared,
        max_residual=max_resid,
        convexity_fraction=convexity,
        barrier_violations=diag.check_barriers(
            u[grid.interior_mask],
            envelope.lower[grid.interior_mask],
            envelope.upper[grid.interior_mask],
        ),
        clamped=False,
        inward_drift_fraction=inward_fraction,
        iterations=report.iterations_used,
        converged=report.converged,
    )
    serialize.write_json(outdir / "summary.json", summary)
    if cfg.outputs.figures:
        figures.render_surface_2d(outdir / "surface.png", grid, u)
        figures.render_verification_2d(outdir / "verification2d.png", grid, xi1, xi2,
                                       slice_x[keep], slice_u[keep], barrier_u[keep],
                                       lam_min)
    print(f"max residual {max_resid:.3e}; convexity fraction {convexity:.4f}; "
          f"inward drift fraction {inward_fraction:.4f}; slice slope {fit.slope:.4f}")
    return EXIT_OK


def cmd_simulate(cfg: ExperimentConfig, args) -> int:
    spec = cfg.problem
    grid = cfg.grid.build()
    solver = cfg.solver
    if cfg.grid.dimension == 1:
        report = solve_1d(spec, grid, solver)
    else:
        report = solve_2d(spec, grid, solver)
    batch = simulate(spec, grid, report.solution, cfg.sim, drift_scale=args.drift_scale)
    comparison = verify_value(spec, grid, report.solution, cfg.sim) \
        if args.drift_scale == 1.0 else None

    outdir = _outdir(cfg)
    summary = _base_summary(cfg)
    summary.update(
        drift_scale=args.drift_scale,
        exit_fraction=batch.exit_fraction,
        cost_mean=batch.cost_mean,
        cost_stderr=batch.cost_stderr,
    )
    if comparison is not None:
        summary.update(u_at_start=comparison.u_at_start, ratio=comparison.ratio)
    serialize.write_json(outdir / "simulation.json", summary)
    if cfg.outputs.per_path_csv or getattr(args, "per_path_csv", False):
        serialize.write_csv(
            outdir / "paths.csv",
            ["path", "exited", "cost"],
            [np.arange(cfg.sim.n_paths), batch.exit_flags.astype(int), batch.cost_estimates],
        )
    if cfg.outputs.figures:
        u_ref = comparison.u_at_start if comparison is not None else batch.cost_mean
        figures.render_simulation(outdir / "simulation.png", batch.cost_estimates, u_ref)
    line = (f"exit fraction {batch.exit_fraction:.4f}; cost {batch.cost_mean:.4f} "
            f"+/- {batch.cost_stderr:.4f}")
    if comparison is not None:
        line += f"; ratio to u(start) {comparison.ratio:.4f}"
    print(line)
    return EXIT_OK


COMMANDS = {
    "constants": cmd_constants,
    "regimes": cmd_regimes,
    "solve1d": cmd_solve1d,
    "solve2d": cmd_solve2d,
    "analyze": cmd_analyze,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
}


def run_command(argv: list[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge_config(args)
        return COMMANDS[args.command](cfg, args)
    except UnsupportedRegimeError as exc:
        print(f"unsupported regime: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except (NumericalDivergenceError, FloatingPointError) as exc:
        print(f"numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (ValueError, TypeError, OSError, yaml.YAMLError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
