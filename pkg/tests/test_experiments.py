import json
from pathlib import Path

import numpy as np
import pytest

from mac_pa.cli import main
from mac_pa.experiments import (
    FIG1_COLUMNS,
    FIG2_COLUMNS,
    FIG3_COLUMNS,
    ConfigError,
    ScenarioConfig,
    parse_config_text,
    run_scenario,
    scenario_columns,
    write_outputs,
)

TINY_CONFIG = """
# two-user toy scenario
K = 2
n_t = 2
n_r = 2
r = 0.5, 0.2
t = 0.6, 0.3
rho_db = 3
budgets = 1, 2
coord = sic
p = 0.5
pa_mode = space_time
mc_draws = 25
seed = 7
sweep = power
sweep_values = 0.5, 2.0
"""


class TestConfigParsing:
    def test_roundtrip(self):
        cfg = parse_config_text(TINY_CONFIG)
        assert cfg.K == 2 and cfg.n_t == 2
        assert cfg.r == (0.5, 0.2)
        assert cfg.sweep == "power" and cfg.sweep_values == (0.5, 2.0)

    def test_invalid_p_names_field(self):
        with pytest.raises(ConfigError, match="p:"):
            parse_config_text(TINY_CONFIG.replace("p = 0.5", "p = 1.5"))

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown"):
            parse_config_text("bogus = 1\n")

    def test_bad_value(self):
        with pytest.raises(ConfigError, match="K"):
            parse_config_text("K = banana\n")

    def test_sud_forbids_constrained_modes(self):
        text = TINY_CONFIG.replace("coord = sic", "coord = sud").replace(
            "pa_mode = space_time", "pa_mode = spatial_only"
        )
        with pytest.raises(ConfigError, match="pa_mode"):
            parse_config_text(text)

    def test_p_sweep_requires_two_user_sic(self):
        text = TINY_CONFIG.replace("sweep = power", "sweep = p").replace(
            "coord = sic", "coord = sud"
        )
        with pytest.raises(ConfigError, match="sweep"):
            parse_config_text(text)

    def test_budgets_length(self):
        with pytest.raises(ConfigError, match="budgets"):
            parse_config_text(TINY_CONFIG.replace("budgets = 1, 2", "budgets = 1"))


@pytest.fixture(scope="module")
def tiny_run():
    return run_scenario(parse_config_text(TINY_CONFIG))


class TestRunScenario:
    def test_columns_complete(self, tiny_run):
        assert tiny_run.header == scenario_columns(2)
        for row in tiny_run.rows:
            assert set(tiny_run.header) <= set(row.keys())

    def test_one_row_per_sweep_point(self, tiny_run):
        assert [row["sweep"] for row in tiny_run.rows] == [0.5, 2.0]

    def test_sre_bounded(self, tiny_run):
        for row in tiny_run.rows:
            assert row["sre"] <= 1.0 + 1e-6

    def test_diagnostics_record_convergence(self, tiny_run):
        diag = tiny_run.diagnostics["rows"]
        assert len(diag) == 2
        for entry in diag:
            assert entry["ne_converged"] and entry["capacity_converged"]
            assert entry["kkt_max_residual"] < 1e-6

    def test_csv_bytes_reproducible(self, tmp_path, tiny_run):
        second = run_scenario(parse_config_text(TINY_CONFIG))
        a, _ = write_outputs(tiny_run, tmp_path / "a")
        b, _ = write_outputs(second, tmp_path / "b")
        assert a.read_bytes() == b.read_bytes()

    def test_threads_match_serial(self, tmp_path, tiny_run):
        threaded = run_scenario(parse_config_text(TINY_CONFIG), threads=2)
        a, _ = write_outputs(tiny_run, tmp_path / "serial")
        b, _ = write_outputs(threaded, tmp_path / "threaded")
        assert a.read_bytes() == b.read_bytes()

    def test_single_point_without_sweep(self):
        cfg = parse_config_text(TINY_CONFIG.replace("sweep = power", "").replace(
            "sweep_values = 0.5, 2.0", ""
        ))
        run = run_scenario(cfg)
        assert len(run.rows) == 1

    def test_three_user_scenario(self):
        text = """
        K = 3
        n_t = 2
        n_r = 2
        r = 0.5, 0.2, 0.0
        t = 0.4, 0.3, 0.6
        rho_db = 2
        budgets = 1, 2, 1
        coord = sic
        mc_draws = 20
        seed = 3
        """
        run = run_scenario(parse_config_text(text))
        assert run.header == scenario_columns(3)
        assert len(run.rows) == 1
        assert run.rows[0]["converged"]
        assert run.rows[0]["sre"] <= 1.0 + 1e-6

    def test_mc_matches_approximation(self, tiny_run):
        # 25 draws is coarse; just keep MC and the approximation on one scale
        for row in tiny_run.rows:
            for k in (1, 2):
                approx = row[f"rate_user{k}"]
                mc = row[f"mc_rate_user{k}"]
                se = row[f"mc_rate_user{k}_stderr"]
                assert abs(mc - approx) < max(5 * se, 0.15 * approx)


class TestCli:
    def test_run_config(self, tmp_path):
        cfg_path = tmp_path / "toy.txt"
        cfg_path.write_text(TINY_CONFIG)
        out = tmp_path / "out"
        assert main(["run", str(cfg_path), "--out", str(out)]) == 0
        assert (out / "toy.csv").exists()
        diag = json.loads((out / "toy.diag.json").read_text())
        assert diag["config"]["K"] == 2

    def test_malformed_config_exits_2(self, tmp_path, capsys):
        cfg_path = tmp_path / "bad.txt"
        cfg_path.write_text(TINY_CONFIG.replace("p = 0.5", "p = 1.5"))
        assert main(["run", str(cfg_path)]) == 2
        assert "p:" in capsys.readouterr().err

    def test_missing_config_exits_2(self, tmp_path):
        assert main(["run", str(tmp_path / "nope.txt")]) == 2

    def test_seed_override(self, tmp_path):
        cfg_path = tmp_path / "toy.txt"
        cfg_path.write_text(TINY_CONFIG)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["run", str(cfg_path), "--out", str(a), "--seed", "99"]) == 0
        assert main(["run", str(cfg_path), "--out", str(b), "--seed", "7"]) == 0
        assert (a / "toy.csv").read_bytes() != (b / "toy.csv").read_bytes()

    def test_nonconvergence_exits_3(self, tmp_path, monkeypatch, tiny_run):
        import copy

        import mac_pa.cli as cli_mod

        flagged = copy.deepcopy(tiny_run)
        flagged.diagnostics["rows"][0]["converged"] = False
        monkeypatch.setattr(cli_mod, "run_scenario", lambda cfg, threads=1: flagged)
        cfg_path = tmp_path / "toy.txt"
        cfg_path.write_text(TINY_CONFIG)
        assert main(["run", str(cfg_path), "--out", str(tmp_path / "out")]) == 3


class TestFigureSchemas:
    def test_documented_headers(self):
        assert FIG1_COLUMNS[0] == "P" and FIG1_COLUMNS[-1] == "converged"
        assert {"sum_rate_sic", "sum_rate_sud", "sum_capacity"} <= set(FIG1_COLUMNS)
        assert FIG2_COLUMNS[0] == "p"
        assert {"sre_space_time", "sre_spatial", "sre_temporal"} <= set(FIG2_COLUMNS)
        assert {"rate_user1", "rate_user2", "sum_capacity"} <= set(FIG3_COLUMNS)
