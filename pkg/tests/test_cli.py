"""Config parsing and CLI surface: artifacts, exit codes, round trips."""

import json
import subprocess
import sys

import pytest

from affinevol.config import config_to_toml, parse_complex, parse_config
from affinevol.errors import ConfigError
from affinevol.cli import main, run

CLASSICAL = """
kernel.type = "constant"
model.lambda = 2.0
model.theta = 0.04
model.sigma = 0.3
model.rho = -0.7
model.v0 = 0.04
model.s0 = 1.0
"""

ROUGH_DESK = """
kernel.type = "power_law"
kernel.alpha = 0.6
model.lambda = 2.0
model.theta = 0.04
model.sigma = 0.3
model.rho = -0.7
model.v0 = 0.04
model.s0 = 1.0
"""

DETERMINISTIC = """
kernel.type = "constant"
model.lambda = 2.0
model.beta = 0.0
model.sigma = 0.3
model.rho = -0.7
model.v0 = 0.0
model.s0 = 1.0
"""


class TestParseConfig:
    def test_minimal_classical_derives_beta(self):
        cfg = parse_config(CLASSICAL)
        assert cfg.model.beta == pytest.approx(0.08)
        assert cfg.model.theta == pytest.approx(0.04)
        assert cfg.resolved["model.beta"] == pytest.approx(0.08)

    def test_consistent_sigma_and_a_accepted(self):
        cfg = parse_config(CLASSICAL + "model.a = 0.09\n")
        assert cfg.model.a == pytest.approx(0.09)

    def test_inconsistent_sigma_a_names_both_keys(self):
        with pytest.raises(ConfigError) as exc:
            parse_config(CLASSICAL + "model.a = 0.04\n")
        msg = str(exc.value)
        assert "model.a" in msg and "model.sigma" in msg

    def test_unknown_keys_listed(self):
        with pytest.raises(ConfigError) as exc:
            parse_config(CLASSICAL + "model.typo = 1\nkernel.bogus = 2\n")
        msg = str(exc.value)
        assert "model.typo" in msg and "kernel.bogus" in msg

    def test_all_problems_reported_together(self):
        bad = """
kernel.type = "power_law"
model.lambda = 2.0
model.rho = -3.0
model.bogus = 1
"""
        with pytest.raises(ConfigError) as exc:
            parse_config(bad)
        assert len(exc.value.problems) >= 3  # missing alpha, bad rho, unknown key, beta/theta

    def test_beta_theta_exclusivity(self):
        with pytest.raises(ConfigError):
            parse_config(CLASSICAL + "model.beta = 0.08\n")
        with pytest.raises(ConfigError):
            parse_config("kernel.type = \"constant\"\nmodel.lambda = 2.0\n")

    def test_overrides_win(self):
        cfg = parse_config(CLASSICAL, overrides=["model.v0 = 0.10"])
        assert cfg.model.v0 == pytest.approx(0.10)

    def test_complex_parsing(self):
        assert parse_complex("0.5,3.0") == 0.5 + 3.0j
        assert parse_complex("2.0") == 2.0 + 0.0j
        assert parse_complex(1.5) == 1.5 + 0.0j


class TestRun:
    def test_cf_zero_exponent_is_one(self):
        cfg = parse_config(CLASSICAL, overrides=["numerics.grid_n = 100"])
        doc = json.loads(run("cf", cfg))
        assert doc["schema"] == 1
        assert doc["value_re"] == 1.0
        assert doc["value_im"] == 0.0

    def test_price_deterministic_intrinsic(self):
        cfg = parse_config(DETERMINISTIC,
                           overrides=["price.strike = 0.8", "numerics.grid_n = 100"])
        doc = json.loads(run("price", cfg))
        assert doc["price"] == pytest.approx(0.2, abs=1e-15)
        assert doc["implied_vol"] == 0.0

    def test_resolvent_csv_columns(self):
        cfg = parse_config(CLASSICAL, overrides=["numerics.grid_n = 8"])
        lines = run("resolvent", cfg).strip().splitlines()
        assert lines[0] == "t,R_lambda,int_R_lambda"
        assert len(lines) == 10
        t0, r0, c0 = (float(x) for x in lines[1].split(","))
        assert (t0, c0) == (0.0, 0.0)

    def test_riccati_csv(self):
        cfg = parse_config(ROUGH_DESK, overrides=[
            "numerics.grid_n = 64", 'riccati.u = "0.0,2.0"'])
        lines = run("riccati", cfg).strip().splitlines()
        assert lines[0] == "t,psi_re,psi_im"
        assert len(lines) == 66

    def test_riccati_solvers_agree_via_cli(self):
        base = ["numerics.grid_n = 400", 'riccati.u = "0.0,2.0"']
        out = {}
        for solver in ("volterra", "fractional", "convolution"):
            cfg = parse_config(ROUGH_DESK, overrides=base + [f'riccati.solver = "{solver}"'])
            last = run("riccati", cfg).strip().splitlines()[-1].split(",")
            out[solver] = complex(float(last[1]), float(last[2]))
        assert abs(out["volterra"] - out["fractional"]) < 1e-6
        assert abs(out["volterra"] - out["convolution"]) < 1e-3

    def test_simulate_summary(self):
        cfg = parse_config(ROUGH_DESK, overrides=[
            "simulate.paths = 200", "simulate.steps = 50", "simulate.seed = 5"])
        lines = run("simulate", cfg).strip().splitlines()
        assert lines[0] == "stat,value"
        stats = dict(line.split(",", 1) for line in lines[1:])
        assert float(stats["mean_v_T"]) > 0.0
        assert stats["seed"] == "5"

    def test_simulate_paths_dump(self):
        cfg = parse_config(ROUGH_DESK, overrides=[
            "simulate.paths = 3", "simulate.steps = 4", "simulate.seed = 5",
            'simulate.output = "paths"'])
        lines = run("simulate", cfg).strip().splitlines()
        assert lines[0] == "t,path_0,path_1,path_2"
        assert len(lines) == 6

    def test_lift_compare_error_column_decreases(self):
        cfg = parse_config(ROUGH_DESK, overrides=[
            "numerics.grid_n = 1000", "lift_compare.atom_counts = [10, 50, 200]",
            "lift_compare.mc_paths = 500", "lift_compare.mc_steps = 50"])
        doc = json.loads(run("lift-compare", cfg))
        errs = [row["cf_error"] for row in doc["rows"]]
        assert errs[0] > errs[1] > errs[2]
        assert doc["mc_moments"]["combined_se"] > 0.0


class TestMainAndExitCodes:
    def test_exit_zero_and_stdout(self, capsys, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text(CLASSICAL)
        code = main(["cf", "--config", str(path), "--set", "numerics.grid_n=100"])
        out = capsys.readouterr()
        assert code == 0
        assert json.loads(out.out)["value_re"] == 1.0
        assert out.err == ""

    def test_validation_error_exit_2_no_stdout(self, capsys, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text(CLASSICAL + "model.a = 0.01\n")
        code = main(["cf", "--config", str(path)])
        out = capsys.readouterr()
        assert code == 2
        assert out.out == ""
        err = json.loads(out.err)
        assert err["error"]["exit_code"] == 2

    def test_numerical_error_exit_3_no_stdout(self, capsys, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text(CLASSICAL)
        # far outside the validated domain: the solver blows up in finite time
        code = main(["cf", "--config", str(path), "--set", 'cf.u = "60.0,0.0"',
                     "--set", "cf.horizon = 10.0", "--set", "numerics.grid_n = 400"])
        out = capsys.readouterr()
        assert code == 3
        assert out.out == ""
        assert json.loads(out.err)["error"]["exit_code"] == 3

    def test_out_file(self, tmp_path):
        cfg_path = tmp_path / "c.toml"
        cfg_path.write_text(CLASSICAL)
        out_path = tmp_path / "result.json"
        code = main(["cf", "--config", str(cfg_path), "--out", str(out_path),
                     "--set", "numerics.grid_n=100"])
        assert code == 0
        assert json.loads(out_path.read_text())["schema"] == 1

    def test_console_script_installed(self):
        proc = subprocess.run([sys.executable, "-m", "affinevol.cli", "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "resolvent" in proc.stdout


class TestRoundTrip:
    def test_report_reproduces_from_embedded_config(self, capsys):
        cfg = parse_config(ROUGH_DESK, overrides=[
            "numerics.grid_n = 200", 'cf.u = "0.5,1.0"'])
        first = run("cf", cfg)
        embedded = json.loads(first)["config"]
        replay_cfg = parse_config(config_to_toml(embedded))
        second = run("cf", replay_cfg)
        assert first == second

    def test_simulate_round_trip_bit_identical(self):
        cfg = parse_config(ROUGH_DESK, overrides=[
            "simulate.paths = 100", "simulate.steps = 20", "simulate.seed = 9"])
        first = run("simulate", cfg)
        # the summary CSV has no embedded config block; re-running from the
        # same resolved config must reproduce it byte for byte
        replay = parse_config(config_to_toml(cfg.resolved))
        assert run("simulate", replay) == first
