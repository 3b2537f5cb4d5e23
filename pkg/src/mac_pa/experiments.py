"""Scenario configuration, figure runners and CSV emission.

Conventions fixed here and documented in the README:
  - rho = 10^(rho_db/10);
  - for K = 2 SIC coordination, p is the probability that user 1 (the first
    user, CSV column suffix ``user1``) is decoded second, i.e. last and
    interference-free;
  - CSV rate columns are raw bits/s/Hz, ``*_per_rx`` columns divide by n_r;
  - rerunning an identical config + seed reproduces the CSV byte for byte.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .channel import exp_profile, sample_channel
from .coordination import CoordinationDistribution, GameContext
from .equilibrium import NeConfig, best_response_ne, sre, sum_capacity
from .exact_game import rate_sud_exact, sum_rate_exact, utility_sic

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "ScenarioRun",
    "parse_config_text",
    "parse_config_file",
    "run_scenario",
    "run_fig1",
    "run_fig2",
    "run_fig3",
    "write_outputs",
    "FIG1_COLUMNS",
    "FIG2_COLUMNS",
    "FIG3_COLUMNS",
]

SWEEP_KINDS = ("power", "p", "rho_db")
PA_MODES = ("space_time", "spatial_only", "temporal_only")
ROW_SEED_STRIDE = 7919  # per-row Monte-Carlo seed: seed + ROW_SEED_STRIDE * row


class ConfigError(ValueError):
    """Invalid scenario configuration; carries the offending field name."""

    def __init__(self, fieldname: str, message: str):
        super().__init__(f"{fieldname}: {message}")
        self.field = fieldname


@dataclass
class ScenarioConfig:
    K: int = 2
    n_t: int = 10
    n_r: int = 10
    r: tuple = (0.5, 0.2)
    t: tuple = (0.5, 0.2)
    rho_db: float = 3.0
    budgets: tuple = (10.0, 10.0)
    coord: str = "sic"
    p: float = 0.5
    pa_mode: str = "space_time"
    mc_draws: int = 500
    seed: int = 1
    sweep: str | None = None
    sweep_values: tuple = ()
    name: str = "scenario"

    def validate(self) -> None:
        if self.K < 1:
            raise ConfigError("K", f"must be >= 1, got {self.K}")
        if self.n_t < 1 or self.n_r < 1:
            raise ConfigError("n_t/n_r", "antenna counts must be >= 1")
        for fieldname, vals in (("r", self.r), ("t", self.t)):
            if len(vals) != self.K:
                raise ConfigError(fieldname, f"needs {self.K} entries, got {len(vals)}")
            if any(not 0.0 <= v <= 1.0 for v in vals):
                raise ConfigError(fieldname, f"coefficients must be in [0, 1], got {vals}")
        if len(self.budgets) != self.K:
            raise ConfigError("budgets", f"needs {self.K} entries, got {len(self.budgets)}")
        if any(b <= 0 for b in self.budgets):
            raise ConfigError("budgets", f"must be positive, got {self.budgets}")
        if self.coord not in ("sic", "sud"):
            raise ConfigError("coord", f"must be 'sic' or 'sud', got {self.coord!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError("p", f"must be in [0, 1], got {self.p}")
        if self.pa_mode not in PA_MODES:
            raise ConfigError("pa_mode", f"must be one of {PA_MODES}, got {self.pa_mode!r}")
        if self.coord == "sud" and self.pa_mode != "space_time":
            raise ConfigError("pa_mode", "constrained PA modes require SIC coordination")
        if self.mc_draws < 1:
            raise ConfigError("mc_draws", "must be >= 1")
        if self.sweep is not None:
            if self.sweep not in SWEEP_KINDS:
                raise ConfigError("sweep", f"must be one of {SWEEP_KINDS}, got {self.sweep!r}")
            if not self.sweep_values:
                raise ConfigError("sweep_values", "sweep requires at least one value")
            if self.sweep == "p" and (self.coord != "sic" or self.K != 2):
                raise ConfigError("sweep", "p sweep is defined for K=2 SIC only")
            if self.sweep == "p" and any(not 0.0 <= v <= 1.0 for v in self.sweep_values):
                raise ConfigError("sweep_values", "p values must be in [0, 1]")
            if self.sweep == "power" and any(v <= 0 for v in self.sweep_values):
                raise ConfigError("sweep_values", "power values must be positive")


_LIST_FIELDS = {"r", "t", "budgets", "sweep_values"}
_INT_FIELDS = {"K", "n_t", "n_r", "mc_draws", "seed"}
_FLOAT_FIELDS = {"rho_db", "p"}
_STR_FIELDS = {"coord", "pa_mode", "sweep", "name"}


def parse_config_text(text: str) -> ScenarioConfig:
    """Parse the flat key = value scenario format ('#' starts a comment)."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("file", f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        try:
            if key in _LIST_FIELDS:
                values[key] = tuple(float(x) for x in val.replace(",", " ").split())
            elif key in _INT_FIELDS:
                values[key] = int(val)
            elif key in _FLOAT_FIELDS:
                values[key] = float(val)
            elif key in _STR_FIELDS:
                values[key] = val
            else:
                raise ConfigError(key, "unknown configuration key")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(key, f"cannot parse {val!r} ({exc})") from None
    cfg = ScenarioConfig(**values)
    cfg.validate()
    return cfg


def parse_config_file(path) -> ScenarioConfig:
    cfg = parse_config_text(Path(path).read_text())
    if cfg.name == "scenario":
        cfg.name = Path(path).stem
    return cfg


@dataclass
class ScenarioRun:
    """One finished run: fixed header, rows in sweep order, and diagnostics."""

    name: str
    header: list
    rows: list
    diagnostics: dict

    @property
    def any_nonconverged(self) -> bool:
        return any(not d.get("converged", True) for d in self.diagnostics["rows"])


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(row[col]) for col in header])


def write_outputs(run: ScenarioRun, out_dir) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{run.name}.csv"
    diag_path = out_dir / f"{run.name}.diag.json"
    write_csv(csv_path, run.header, run.rows)
    with open(diag_path, "w") as fh:
        json.dump(run.diagnostics, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, diag_path


# ---------------------------------------------------------------------------
# generic scenario runner


def _scenario_point(cfg: ScenarioConfig, idx: int, value: float) -> tuple[dict, dict]:
    """Solve one sweep point; returns (CSV row, diagnostics entry)."""
    budgets = np.asarray(cfg.budgets, dtype=float)
    rho_db, p = cfg.rho_db, cfg.p
    if cfg.sweep == "power":
        budgets = np.full(cfg.K, value)
    elif cfg.sweep == "p":
        p = value
    elif cfg.sweep == "rho_db":
        rho_db = value
    rho = 10.0 ** (rho_db / 10.0)

    profile = exp_profile(cfg.n_r, cfg.n_t, cfg.r, cfg.t)
    if cfg.coord == "sud":
        coord = CoordinationDistribution.sud()
    elif cfg.K == 2:
        coord = CoordinationDistribution.two_user_sic(p)
    else:
        coord = CoordinationDistribution.fair_sic(cfg.K)

    ne_cfg = NeConfig(pa_mode=cfg.pa_mode)
    res = best_response_ne(profile, rho, coord, budgets, ne_cfg)
    cap = sum_capacity(profile, rho, budgets, NeConfig())

    samples = sample_channel(profile, cfg.mc_draws, cfg.seed + ROW_SEED_STRIDE * idx)
    ctx = GameContext(profile=profile, rho=rho, coord=coord)
    row = {"sweep": value}
    for k in range(cfg.K):
        mc = (
            utility_sic(ctx, res.powers, k, samples)
            if coord.mode == "sic"
            else rate_sud_exact(ctx, res.powers, k, samples)
        )
        row[f"rate_user{k + 1}"] = res.raw_rates[k]
        row[f"rate_user{k + 1}_per_rx"] = res.rates[k]
        row[f"mc_rate_user{k + 1}"] = mc.value
        row[f"mc_rate_user{k + 1}_stderr"] = mc.stderr
        row[f"lambda_user{k + 1}"] = res.lambdas[k]
    row["sum_rate"] = res.raw_sum_rate
    row["sum_rate_per_rx"] = res.sum_rate
    row["sum_capacity"] = cap.raw_value
    row["sum_capacity_per_rx"] = cap.value
    row["sre"] = sre(res.sum_rate, cap.value)
    row["converged"] = res.converged and cap.converged

    diag = {
        "sweep": value,
        "ne_rounds": res.outer_iterations,
        "ne_converged": bool(res.converged),
        "capacity_rounds": cap.outer_iterations,
        "capacity_converged": bool(cap.converged),
        "kkt_max_residual": None if res.kkt is None else res.kkt.max_residual,
        "budget_slack": [float(s) for s in res.slack],
        "converged": bool(res.converged and cap.converged),
    }
    return row, diag


def scenario_columns(K: int) -> list:
    cols = ["sweep"]
    for k in range(1, K + 1):
        cols += [
            f"rate_user{k}",
            f"rate_user{k}_per_rx",
            f"mc_rate_user{k}",
            f"mc_rate_user{k}_stderr",
            f"lambda_user{k}",
        ]
    cols += [
        "sum_rate",
        "sum_rate_per_rx",
        "sum_capacity",
        "sum_capacity_per_rx",
        "sre",
        "converged",
    ]
    return cols


def _run_points(worker, points, threads: int):
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(worker, points))
    return [worker(pt) for pt in points]


def _scenario_worker(args):
    cfg_dict, idx, value = args
    return _scenario_point(ScenarioConfig(**cfg_dict), idx, value)


def run_scenario(cfg: ScenarioConfig, threads: int = 1) -> ScenarioRun:
    """One CSV row per sweep point (a single row without a sweep axis)."""
    cfg.validate()
    values = list(cfg.sweep_values) if cfg.sweep else [0.0]
    args = [(asdict(cfg), i, float(v)) for i, v in enumerate(values)]
    results = _run_points(_scenario_worker, args, threads)
    rows = [r for r, _ in results]
    diags = [d for _, d in results]
    return ScenarioRun(
        name=cfg.name,
        header=scenario_columns(cfg.K),
        rows=rows,
        diagnostics={"config": asdict(cfg), "rows": diags},
    )


# ---------------------------------------------------------------------------
# figure scenarios (parameters from the reference correlation profiles)

FIG1_COLUMNS = [
    "P",
    "sum_rate_sic",
    "sum_rate_sud",
    "sum_capacity",
    "sum_rate_sic_per_rx",
    "sum_rate_sud_per_rx",
    "sum_capacity_per_rx",
    "mc_sum_rate_sic",
    "mc_sum_rate_sic_stderr",
    "mc_sum_rate_sud",
    "mc_sum_rate_sud_stderr",
    "sre_sic",
    "sre_sud",
    "converged",
]

FIG2_COLUMNS = [
    "p",
    "sre_space_time",
    "sre_spatial",
    "sre_temporal",
    "sum_rate_space_time",
    "sum_rate_spatial",
    "sum_rate_temporal",
    "sum_capacity",
    "converged",
]

FIG3_COLUMNS = [
    "p",
    "rate_user1",
    "rate_user2",
    "sum_rate",
    "sum_capacity",
    "rate_user1_per_rx",
    "rate_user2_per_rx",
    "mc_rate_user1",
    "mc_rate_user1_stderr",
    "mc_rate_user2",
    "mc_rate_user2_stderr",
    "sre",
    "converged",
]

FIG1_SCENARIO = dict(n=10, r=(0.5, 0.2), t=(0.5, 0.2), rho_db=3.0, p=0.5)
FIG2_SCENARIO = dict(n=10, r=(0.3, 0.0), t=(0.5, 0.2), rho_db=4.0, budgets=(5.0, 50.0))
FIG3_SCENARIO = dict(n=10, r=(0.4, 0.2), t=(0.6, 0.3), rho_db=3.0, budgets=(5.0, 50.0))

FIG1_POWER_GRID = tuple(float(v) for v in np.logspace(-1.0, 2.0, 13))
P_GRID_11 = tuple(float(v) for v in np.linspace(0.0, 1.0, 11))


def _fig1_point(args) -> tuple[dict, dict]:
    idx, P, mc_draws, seed = args
    sc = FIG1_SCENARIO
    profile = exp_profile(sc["n"], sc["n"], sc["r"], sc["t"])
    rho = 10.0 ** (sc["rho_db"] / 10.0)
    budgets = np.array([P, P])

    coord_sic = CoordinationDistribution.two_user_sic(sc["p"])
    coord_sud = CoordinationDistribution.sud()
    res_sic = best_response_ne(profile, rho, coord_sic, budgets, NeConfig())
    res_sud = best_response_ne(profile, rho, coord_sud, budgets, NeConfig())
    cap = sum_capacity(profile, rho, budgets, NeConfig())

    samples = sample_channel(profile, mc_draws, seed + ROW_SEED_STRIDE * idx)
    mc_sic = sum_rate_exact(
        GameContext(profile=profile, rho=rho, coord=coord_sic), res_sic.powers, samples
    )
    mc_sud = sum_rate_exact(
        GameContext(profile=profile, rho=rho, coord=coord_sud), res_sud.powers, samples
    )

    row = {
        "P": P,
        "sum_rate_sic": res_sic.raw_sum_rate,
        "sum_rate_sud": res_sud.raw_sum_rate,
        "sum_capacity": cap.raw_value,
        "sum_rate_sic_per_rx": res_sic.sum_rate,
        "sum_rate_sud_per_rx": res_sud.sum_rate,
        "sum_capacity_per_rx": cap.value,
        "mc_sum_rate_sic": mc_sic.value,
        "mc_sum_rate_sic_stderr": mc_sic.stderr,
        "mc_sum_rate_sud": mc_sud.value,
        "mc_sum_rate_sud_stderr": mc_sud.stderr,
        "sre_sic": sre(res_sic.sum_rate, cap.value),
        "sre_sud": sre(res_sud.sum_rate, cap.value),
        "converged": res_sic.converged and res_sud.converged and cap.converged,
    }
    diag = {
        "P": P,
        "sic_rounds": res_sic.outer_iterations,
        "sud_rounds": res_sud.outer_iterations,
        "capacity_rounds": cap.outer_iterations,
        "kkt_max_residual_sic": res_sic.kkt.max_residual,
        "kkt_max_residual_sud": res_sud.kkt.max_residual,
        "converged": bool(row["converged"]),
    }
    return row, diag


def run_fig1(mc_draws: int = 500, seed: int = 1, threads: int = 1) -> ScenarioRun:
    """Sum-rate vs per-user power budget: fair SIC, SUD and sum-capacity."""
    args = [(i, P, mc_draws, seed) for i, P in enumerate(FIG1_POWER_GRID)]
    results = _run_points(_fig1_point, args, threads)
    return ScenarioRun(
        name="fig1",
        header=FIG1_COLUMNS,
        rows=[r for r, _ in results],
        diagnostics={"scenario": _jsonable(FIG1_SCENARIO), "rows": [d for _, d in results]},
    )


def _fig2_point(args) -> tuple[dict, dict]:
    idx, p = args
    sc = FIG2_SCENARIO
    profile = exp_profile(sc["n"], sc["n"], sc["r"], sc["t"])
    rho = 10.0 ** (sc["rho_db"] / 10.0)
    budgets = np.asarray(sc["budgets"])
    coord = CoordinationDistribution.two_user_sic(p)
    cap = sum_capacity(profile, rho, budgets, NeConfig())

    results = {}
    diag = {"p": p, "capacity_rounds": cap.outer_iterations}
    for mode in PA_MODES:
        res = best_response_ne(profile, rho, coord, budgets, NeConfig(pa_mode=mode))
        results[mode] = res
        diag[f"{mode}_rounds"] = res.outer_iterations
        diag[f"{mode}_converged"] = bool(res.converged)

    row = {
        "p": p,
        "sre_space_time": sre(results["space_time"].sum_rate, cap.value),
        "sre_spatial": sre(results["spatial_only"].sum_rate, cap.value),
        "sre_temporal": sre(results["temporal_only"].sum_rate, cap.value),
        "sum_rate_space_time": results["space_time"].raw_sum_rate,
        "sum_rate_spatial": results["spatial_only"].raw_sum_rate,
        "sum_rate_temporal": results["temporal_only"].raw_sum_rate,
        "sum_capacity": cap.raw_value,
        "converged": all(r.converged for r in results.values()) and cap.converged,
    }
    diag["converged"] = bool(row["converged"])
    return row, diag


def run_fig2(mc_draws: int = 500, seed: int = 1, threads: int = 1) -> ScenarioRun:
    """Sum-rate efficiency vs coordination parameter p for the three PA modes."""
    args = [(i, p) for i, p in enumerate(P_GRID_11)]
    results = _run_points(_fig2_point, args, threads)
    return ScenarioRun(
        name="fig2",
        header=FIG2_COLUMNS,
        rows=[r for r, _ in results],
        diagnostics={"scenario": _jsonable(FIG2_SCENARIO), "rows": [d for _, d in results]},
    )


def _fig3_point(args) -> tuple[dict, dict]:
    idx, p, mc_draws, seed = args
    sc = FIG3_SCENARIO
    profile = exp_profile(sc["n"], sc["n"], sc["r"], sc["t"])
    rho = 10.0 ** (sc["rho_db"] / 10.0)
    budgets = np.asarray(sc["budgets"])
    coord = CoordinationDistribution.two_user_sic(p)
    res = best_response_ne(profile, rho, coord, budgets, NeConfig(pa_mode="spatial_only"))
    cap = sum_capacity(profile, rho, budgets, NeConfig())

    samples = sample_channel(profile, mc_draws, seed + ROW_SEED_STRIDE * idx)
    ctx = GameContext(profile=profile, rho=rho, coord=coord)
    mc = [utility_sic(ctx, res.powers, k, samples) for k in range(2)]

    row = {
        "p": p,
        "rate_user1": res.raw_rates[0],
        "rate_user2": res.raw_rates[1],
        "sum_rate": res.raw_sum_rate,
        "sum_capacity": cap.raw_value,
        "rate_user1_per_rx": res.rates[0],
        "rate_user2_per_rx": res.rates[1],
        "mc_rate_user1": mc[0].value,
        "mc_rate_user1_stderr": mc[0].stderr,
        "mc_rate_user2": mc[1].value,
        "mc_rate_user2_stderr": mc[1].stderr,
        "sre": sre(res.sum_rate, cap.value),
        "converged": res.converged and cap.converged,
    }
    diag = {
        "p": p,
        "ne_rounds": res.outer_iterations,
        "capacity_rounds": cap.outer_iterations,
        "converged": bool(row["converged"]),
    }
    return row, diag


def run_fig3(mc_draws: int = 500, seed: int = 1, threads: int = 1) -> ScenarioRun:
    """NE rate pairs (R1, R2) vs p under spatial PA, with the capacity reference."""
    args = [(i, p, mc_draws, seed) for i, p in enumerate(P_GRID_11)]
    results = _run_points(_fig3_point, args, threads)
    return ScenarioRun(
        name="fig3",
        header=FIG3_COLUMNS,
        rows=[r for r, _ in results],
        diagnostics={"scenario": _jsonable(FIG3_SCENARIO), "rows": [d for _, d in results]},
    )


def _jsonable(d: dict) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}
