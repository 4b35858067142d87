import json
from pathlib import Path

import numpy as np
import pytest
import yaml

from hjb_blowup.cli import (
    ExperimentConfig,
    GridSettings,
    OutputSettings,
    config_from_dict,
    config_to_dict,
    emit_config,
    run_command,
)
from hjb_blowup.control import SimConfig
from hjb_blowup.mesh import Grid1D
from hjb_blowup.model import ProblemSpec
from hjb_blowup.serialize import read_field_1d, write_field_1d
from hjb_blowup.solver import SolverConfig


FAST_1D = ["--n", "120", "--max-iter", "150", "--tol", "1e-8", "--grad-clip", "1e5"]


def run(args):
    return run_command(args)


class TestConstantsCommand:
    def test_gradient_dominant_line(self, capsys):
        assert run(["constants", "--q", "1.6", "--beta", "0.5"]) == 0
        out = capsys.readouterr().out
        assert "gamma=1.5" in out
        assert "regime=gradient-dominant" in out
        assert "c_star=4.873362897" in out
        assert "xi0=3.070026249" in out

    def test_critical_line(self, capsys):
        assert run(["constants", "--q", "2.5", "--beta", "0.5"]) == 0
        out = capsys.readouterr().out
        assert "regime=critical-logarithmic" in out
        assert "gamma=0" in out

    def test_high_order_without_compat(self, capsys):
        assert run(["constants", "--q", "3.0", "--beta", "0.5"]) == 0
        out = capsys.readouterr().out
        assert "regime=high-order" in out
        assert "c_star=" not in out

    def test_high_order_with_compat(self, capsys):
        assert run(["constants", "--q", "3.0", "--beta", "0.5", "--high-order-compat"]) == 0
        out = capsys.readouterr().out
        assert "theory_supported=false" in out


class TestExitCodes:
    def test_missing_q_is_config_error(self):
        assert run(["constants", "--beta", "0.5"]) == 2

    def test_invalid_value_is_config_error(self):
        assert run(["constants", "--q", "0.9", "--beta", "0.5"]) == 2

    def test_malformed_config_file(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("problem: [not, a, mapping\n")
        out = tmp_path / "out"
        code = run(["solve1d", "--config", str(bad), "--output-dir", str(out)])
        assert code == 2
        assert not out.exists()  # no partial outputs

    def test_unknown_subcommand_usage_error(self):
        with pytest.raises(SystemExit) as err:
            run(["frobnicate"])
        assert err.value.code == 2

    def test_unsupported_regime_exit(self, tmp_path):
        code = run(
            ["solve1d", "--q", "3.0", "--beta", "0.5", "--output-dir", str(tmp_path / "o")]
            + FAST_1D
        )
        assert code == 4

    def test_divergence_exit(self, tmp_path):
        code = run(
            [
                "solve1d", "--q", "1.6", "--beta", "0.5",
                "--output-dir", str(tmp_path / "o"),
                "--n", "100", "--max-iter", "500", "--damping", "1.0",
                "--lambda-factor", "1.0", "--grad-clip", "1e300",
                "--init-mode", "subsolution", "--no-figures",
            ]
        )
        assert code == 3


class TestConfigRoundTrip:
    def make_config(self):
        return ExperimentConfig(
            problem=ProblemSpec(q=1.6, beta=0.5, alpha=-0.2, f_level=1.0),
            grid=GridSettings(dimension=1, n=200, delta=0.05, L=1.0),
            solver=SolverConfig(max_iter=99, tol=1e-7, damping=0.4),
            sim=SimConfig(horizon_t=2.0, dt=1e-3, n_paths=10, seed=3, start_point=(0.1,)),
            outputs=OutputSettings(directory="somewhere", figures=False),
        )

    def test_parse_emit_parse_identity(self):
        cfg = self.make_config()
        once = config_from_dict(yaml.safe_load(emit_config(cfg)))
        twice = config_from_dict(yaml.safe_load(emit_config(once)))
        assert once == cfg
        assert twice == once

    def test_dict_round_trip(self):
        cfg = self.make_config()
        assert config_from_dict(config_to_dict(cfg)) == cfg

    def test_unknown_section_rejected(self):
        with pytest.raises(ValueError):
            config_from_dict({"problem": {"q": 1.6, "beta": 0.5}, "mystery": {}})

    def test_flags_override_file(self, tmp_path, capsys):
        cfg_file = tmp_path / "cfg.yaml"
        cfg_file.write_text("problem: {q: 2.5, beta: 0.5}\n")
        assert run(["constants", "--config", str(cfg_file), "--q", "1.6"]) == 0
        out = capsys.readouterr().out
        assert "regime=gradient-dominant" in out


class TestSerialization:
    def test_field_round_trip_exact(self, tmp_path):
        grid = Grid1D(n=3, L=1.0, delta=0.3)
        values = np.array([0.1 + 0.2, np.pi, 1e-17])
        path = tmp_path / "field.csv"
        write_field_1d(path, grid, values)
        xs, us = read_field_1d(path)
        assert np.array_equal(xs, grid.x)
        assert np.array_equal(us, values)

    def test_2d_mask_column_binary(self, tmp_path):
        out = tmp_path / "o"
        code = run(
            ["solve2d", "--q", "1.6", "--beta", "0.5", "--output-dir", str(out),
             "--n", "24", "--max-iter", "30", "--no-figures"]
        )
        assert code == 0
        rows = (out / "solution2d.csv").read_text().splitlines()
        assert rows[0] == "x1,x2,u,interior"
        flags = {row.split(",")[3] for row in rows[1:]}
        assert flags <= {"0", "1"}


class TestVerifySummary:
    def test_summary_schema_and_values(self, tmp_path):
        out = tmp_path / "o"
        code = run(
            ["verify", "--q", "1.6", "--beta", "0.5", "--output-dir", str(out),
             "--no-figures", "--clamp"] + FAST_1D
        )
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        for key in [
            "gamma", "c_star", "xi0", "slope", "r2",
            "max_residual", "convexity_fraction", "barrier_violations",
        ]:
            assert key in summary
        assert summary["gamma"] == 1.5
        assert summary["clamped"] is True
        assert summary["barrier_violations"] == 0
        # every knob echoed
        assert summary["config"]["solver"]["max_iter"] == 150
        assert summary["config"]["problem"]["q"] == 1.6
        for name in ["verify_barriers.csv", "verify_convexity.csv",
                     "verify_drift.csv", "verify_residual.csv"]:
            assert (out / name).exists()


class TestReproducibility:
    def test_byte_identical_runs(self, tmp_path):
        args = ["verify", "--q", "1.6", "--beta", "0.5", "--no-figures"] + FAST_1D
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert run(args + ["--output-dir", str(out1)]) == 0
        assert run(args + ["--output-dir", str(out2)]) == 0
        files1 = sorted(p.name for p in out1.iterdir())
        files2 = sorted(p.name for p in out2.iterdir())
        assert files1 == files2
        for name in files1:
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name

    def test_figures_byte_identical(self, tmp_path):
        args = [
            "solve1d", "--q", "1.6", "--beta", "0.5", "--n", "60",
            "--max-iter", "30",
        ]
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert run(args + ["--output-dir", str(out1)]) == 0
        assert run(args + ["--output-dir", str(out2)]) == 0
        assert (out1 / "profile.png").read_bytes() == (out2 / "profile.png").read_bytes()

    def test_simulate_reproducible(self, tmp_path):
        args = [
            "simulate", "--q", "1.6", "--beta", "0.5", "--no-figures",
            "--horizon", "0.2", "--dt", "1e-3", "--n-paths", "16", "--seed", "7",
            "--per-path-csv",
        ] + FAST_1D
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert run(args + ["--output-dir", str(out1)]) == 0
        assert run(args + ["--output-dir", str(out2)]) == 0
        assert (out1 / "simulation.json").read_bytes() == (out2 / "simulation.json").read_bytes()
        assert (out1 / "paths.csv").read_bytes() == (out2 / "paths.csv").read_bytes()


class TestSweep:
    def test_sweep_merges_summaries(self, tmp_path):
        out = tmp_path / "o"
        code = run(
            ["solve1d", "--beta", "0.5", "--q", "1.6", "--sweep", "1.4,1.6,1.8",
             "--output-dir", str(out), "--no-figures", "--n", "80", "--max-iter", "40"]
        )
        assert code == 0
        merged = json.loads((out / "sweep.json").read_text())
        assert set(merged["sweep"]) == {"1.4", "1.6", "1.8"}
        for q in ("1.4", "1.6", "1.8"):
            assert (out / f"sweep_q{q}" / "solution.csv").exists()


class TestAnalyzeAndRegimes:
    def test_analyze_outputs(self, tmp_path):
        out = tmp_path / "o"
        code = run(
            ["analyze", "--q", "1.6", "--beta", "0.5", "--output-dir", str(out),
             "--no-figures"] + FAST_1D
        )
        assert code == 0
        summary = json.loads((out / "analyze_summary.json").read_text())
        assert summary["log_case_q"] == 2.5
        assert "slope" in summary["powerlaw_fit"]
        assert "r_squared" in summary["semilog_fit"]

    def test_regimes_outputs(self, tmp_path):
        out = tmp_path / "o"
        code = run(
            ["regimes", "--q", "1.6", "--beta", "0.5", "--output-dir", str(out),
             "--no-figures", "--n", "80", "--max-iter", "40"]
        )
        assert code == 0
        summary = json.loads((out / "regimes_summary.json").read_text())
        cases = summary["cases"]
        assert cases["gradient-dominant"]["gamma"] == 1.5
        assert cases["high-order"]["theory_supported"] is False
        assert cases["critical-logarithmic"]["q"] == 2.5
        text = (out / "regimes.csv").read_text().splitlines()
        assert text[0] == "case,q,x,u"


class TestOutdirEnvVar:
    def test_env_var_default(self, tmp_path, monkeypatch):
        target = tmp_path / "envout"
        monkeypatch.setenv("HJB_BLOWUP_OUTDIR", str(target))
        code = run(["solve1d", "--q", "1.6", "--beta", "0.5", "--no-figures",
                    "--n", "60", "--max-iter", "20"])
        assert code == 0
        assert (target / "solution.csv").exists()
