"""Fast self-contained property checks behind `mac-pa selftest`.

Reduced-count versions of the property suites; the full-size versions live in
the test suite.  Each check prints one pass/fail line.
"""

from __future__ import annotations

import numpy as np

from .channel import iid_profile, sample_channel
from .coordination import CoordinationDistribution, DecodingOrder, GameContext, uniform_powers
from .equilibrium import waterfill
from .exact_game import (
    concavity_second_derivative,
    logdet2_eye_plus,
    sum_rate_exact,
    trace_inequality_gap,
    utility_sic_draws,
)
from .large_system import solve_block_fp


def _random_psd(rng, n, definite=False):
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    M = X @ X.conj().T / n
    if definite:
        M = M + 0.1 * np.eye(n)
    return M


def check_trace_inequality(trials: int = 1000, seed: int = 11) -> bool:
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(trials):
        K = int(rng.integers(1, 5))
        n = int(rng.integers(1, 7))
        A = [_random_psd(rng, n, definite=(i == 0)) for i in range(K)]
        B = [_random_psd(rng, n, definite=(i == 0)) for i in range(K)]
        worst = min(worst, trace_inequality_gap(A, B))
    return worst >= -1e-10


def check_concavity(trials: int = 100, seed: int = 12) -> bool:
    rng = np.random.default_rng(seed)
    profile = iid_profile(2, 2, 2)
    order = DecodingOrder.from_sequence((0, 1))
    coord = CoordinationDistribution.single_order(order)
    ctx = GameContext(profile=profile, rho=1.5, coord=coord)
    powers = uniform_powers(coord, 2, 2, [1.0, 1.0])
    samples = sample_channel(profile, 8, seed)
    worst = -np.inf
    for _ in range(trials):
        Q1 = _random_psd(rng, 2)
        Q2 = _random_psd(rng, 2)
        est = concavity_second_derivative(
            ctx, order, powers, 0, Q1, Q2, float(rng.uniform()), samples
        )
        worst = max(worst, est.value)
    return worst <= 1e-10


def check_telescoping(draws: int = 50, seed: int = 13) -> bool:
    profile = iid_profile(3, 3, 3)
    order = DecodingOrder.from_sequence((2, 0, 1))
    coord = CoordinationDistribution.single_order(order)
    ctx = GameContext(profile=profile, rho=2.0, coord=coord)
    rng = np.random.default_rng(seed)
    P = rng.uniform(0.0, 2.0, size=(3, 1, 3))
    from .coordination import SpaceTimePowerProfile

    powers = SpaceTimePowerProfile(coord=coord, P=P, budgets=np.full(3, 2.0))
    samples = sample_channel(profile, draws, seed)
    per_user = sum(utility_sic_draws(ctx, powers, k, samples) for k in range(3))
    joint = np.empty(draws)
    for d in range(draws):
        H = samples.draws[d]
        S = sum(
            2.0 * H[k] @ np.diag(P[k, 0]) @ H[k].conj().T for k in range(3)
        )
        joint[d] = logdet2_eye_plus(S)
    return float(np.max(np.abs(per_user - joint))) < 1e-9


def check_waterfill_oracle(trials: int = 20, seed: int = 14) -> bool:
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        c = rng.uniform(0.05, 10.0, size=(1, 2))
        budget = float(rng.uniform(0.2, 4.0))
        P, _ = waterfill(np.ones(1), c, budget, n_r=4, tol=1e-13)
        grid = np.arange(0.0, budget + 1e-4, 1e-4)
        obj = np.log2(1 + c[0, 0] * grid) + np.log2(1 + c[0, 1] * (budget - grid))
        best = grid[int(np.argmax(obj))]
        if abs(P[0, 0] - best) > 1e-3:
            return False
    return True


def check_fixed_point(seed: int = 15) -> bool:
    rng = np.random.default_rng(seed)
    sigma = rng.uniform(0.1, 2.0, size=(2, 5, 4))
    P = rng.uniform(0.0, 3.0, size=(2, 4))
    fp = solve_block_fp(sigma, 1.7, P, 2)
    return fp.residual < 1e-10


def check_sic_beats_sud(draws: int = 200, seed: int = 16) -> bool:
    profile = iid_profile(2, 3, 3)
    order = DecodingOrder.from_sequence((0, 1))
    coord = CoordinationDistribution.single_order(order)
    ctx = GameContext(profile=profile, rho=1.0, coord=coord)
    powers = uniform_powers(coord, 2, 3, [1.0, 1.0])
    samples = sample_channel(profile, draws, seed)
    sic = sum_rate_exact(ctx, powers, samples, scheme="sic")
    ctx_sud = GameContext(profile=profile, rho=1.0, coord=CoordinationDistribution.sud())
    powers_sud = uniform_powers(ctx_sud.coord, 2, 3, [1.0, 1.0])
    sud = sum_rate_exact(ctx_sud, powers_sud, samples, scheme="sud")
    return sic.value >= sud.value


CHECKS = [
    ("trace inequality nonnegativity", check_trace_inequality),
    ("utility concavity along segments", check_concavity),
    ("SIC sum-rate telescoping", check_telescoping),
    ("water-filling vs grid search", check_waterfill_oracle),
    ("fixed-point self-consistency", check_fixed_point),
    ("SIC sum-rate dominates SUD", check_sic_beats_sud),
]


def run_selftest() -> bool:
    ok = True
    for name, fn in CHECKS:
        passed = fn()
        print(f"[{'PASS' if passed else 'FAIL'}] {name}")
        ok = ok and passed
    return ok
