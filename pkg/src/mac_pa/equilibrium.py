"""Nash equilibria by iterative water-filling, limit regimes and sum-capacity.

The generic allocation step solves, for one user, the concave program

    maximize   sum_g sum_t a[g,t] * log2(1 + c[g,t] * x_g)    (up to 1/n_r)
    subject to sum_g omega_g * x_g = budget,   x_g >= 0,

whose optimum equalizes the group marginals M_g(x) = sum_t a*c/(1+c*x) at a
common level nu = n_r * ln2 * lambda.  The three power-allocation modes are
instances: space-time (one mode per group), spatial (orders tied inside a
group), temporal (antennas tied inside a group).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import UiuProfile
from .coordination import (
    CoordinationDistribution,
    GameContext,
    SpaceTimePowerProfile,
    uniform_powers,
)
from .exact_game import KktReport, kkt_residual
from .large_system import (
    SolverConfig,
    approx_utility_sic,
    approx_utility_sud,
    _block_rate_for,
    sic_signal_fp,
    sud_signal_fp,
)

__all__ = [
    "NeConfig",
    "EquilibriumResult",
    "CapacityResult",
    "waterfill",
    "spatial_waterfill",
    "temporal_waterfill",
    "best_response_ne",
    "constrained_ne",
    "ne_high_snr",
    "ne_low_snr",
    "random_feasible_powers",
    "sum_capacity",
    "sre",
]

LN2 = math.log(2.0)
PA_MODES = ("space_time", "spatial_only", "temporal_only")
SRE_SLACK = 1e-6


@dataclass
class NeConfig:
    """Outer best-response loop controls."""

    outer_tol: float = 1e-8
    max_rounds: int = 500
    bisection_tol: float = 1e-12
    pa_mode: str = "space_time"
    fp: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.outer_tol <= 0 or self.bisection_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.pa_mode not in PA_MODES:
            raise ValueError(f"pa_mode must be one of {PA_MODES}, got {self.pa_mode!r}")


@dataclass
class EquilibriumResult:
    """Converged (or last-iterate) equilibrium of the power-allocation game."""

    powers: SpaceTimePowerProfile
    lambdas: np.ndarray
    rates: np.ndarray  # per-user utilities, 1/n_r normalized
    sum_rate: float  # 1/n_r normalized
    n_r: int
    outer_iterations: int
    slack: np.ndarray
    kkt: KktReport | None
    converged: bool

    @property
    def raw_rates(self) -> np.ndarray:
        return self.rates * self.n_r

    @property
    def raw_sum_rate(self) -> float:
        return self.sum_rate * self.n_r


@dataclass
class CapacityResult:
    """Centralized sum-capacity solve (team water-filling on the full block)."""

    powers: np.ndarray  # (K, n_t)
    value: float  # 1/n_r normalized
    n_r: int
    outer_iterations: int
    converged: bool

    @property
    def raw_value(self) -> float:
        return self.value * self.n_r


# ---------------------------------------------------------------------------
# grouped water-filling


def _marginals(a: np.ndarray, c: np.ndarray, x: np.ndarray) -> np.ndarray:
    return (a * c / (1.0 + c * x[:, None])).sum(axis=1)


def _x_of_nu(a: np.ndarray, c: np.ndarray, nu: float, single: bool) -> np.ndarray:
    """Per-group solution of M_g(x) = nu (0 where already below at x = 0)."""
    m0 = (a * c).sum(axis=1)
    x = np.zeros(a.shape[0])
    act = m0 > nu
    if not np.any(act):
        return x
    if single:
        # one term per group: a*c/(1+c*x) = nu  =>  x = a/nu - 1/c
        aa = a[act, 0]
        cc = c[act, 0]
        x[act] = aa / nu - 1.0 / cc
        return x
    lo = np.zeros(int(act.sum()))
    hi = a[act].sum(axis=1) / nu + 1.0
    aa, cc = a[act], c[act]
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        too_high = _marginals(aa, cc, mid) > nu
        lo = np.where(too_high, mid, lo)
        hi = np.where(too_high, hi, mid)
    x[act] = 0.5 * (lo + hi)
    return x


def _grouped_waterfill(
    a: np.ndarray, c: np.ndarray, omega: np.ndarray, budget: float, tol: float
) -> tuple[np.ndarray, float]:
    """Solve the grouped allocation; returns (x per group, nu).

    Groups with omega = 0 do not enter the budget but still receive the
    common-level solution (their allocation is payoff- and budget-neutral).
    """
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if budget <= 0:
        raise ValueError("budget must be positive")
    single = a.shape[1] == 1
    m0 = (a * c).sum(axis=1)
    carriers = (m0 > 0) & (omega > 0)
    if not np.any(carriers):
        raise ValueError("no transmittable mode: every budget-carrying coefficient is zero")

    def spend(nu: float) -> float:
        return float(omega @ _x_of_nu(a, c, nu, single))

    nu_hi = float(m0[carriers].max())
    nu_lo = nu_hi
    while spend(nu_lo) < budget:
        nu_lo *= 0.5
        if nu_lo < 1e-300:
            raise ValueError("water-level search underflow")
    nu = nu_lo
    for _ in range(500):
        nu = 0.5 * (nu_lo + nu_hi)
        g = spend(nu)
        if abs(g - budget) <= tol * budget:
            break
        if g > budget:
            nu_lo = nu
        else:
            nu_hi = nu
    return _x_of_nu(a, c, nu, single), nu


def waterfill(
    weights, coeffs, budget: float, n_r: int, tol: float = 1e-12
) -> tuple[np.ndarray, float]:
    """Space-time water-filling over (symbol, mode) pairs.

    weights: (S,) symbol probabilities; coeffs: (S, J) the coefficients
    c = (N+1)*rho*gamma (zero-coefficient modes receive zero power); budget is
    the averaged-trace cap n_t * Pbar.  Returns (P of shape (S, J), lambda),
    with P(s,j) = [1/(ln2*n_r*lambda) - 1/c(s,j)]^+ and lambda tuned by
    bisection so that sum_s w_s sum_j P(s,j) = budget.
    """
    weights = np.asarray(weights, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    S, J = coeffs.shape
    a = np.ones((S * J, 1))
    c = coeffs.reshape(S * J, 1)
    omega = np.repeat(weights, J)
    x, nu = _grouped_waterfill(a, c, omega, budget, tol)
    return x.reshape(S, J), nu / (n_r * LN2)


def spatial_waterfill(
    weights, coeffs, budget: float, n_r: int, tol: float = 1e-12
) -> tuple[np.ndarray, float]:
    """Order-tied water-filling: one shared power per antenna mode.

    Maximizes sum_s w_s log-terms with P(j) common to all symbols, subject to
    sum_j P(j) = budget.  Returns (P of shape (J,), lambda).
    """
    weights = np.asarray(weights, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    S, J = coeffs.shape
    a = np.broadcast_to(weights[None, :], (J, S))
    c = coeffs.T
    x, nu = _grouped_waterfill(a, c, np.ones(J), budget, tol)
    return x, nu / (n_r * LN2)


def temporal_waterfill(
    weights, coeffs, pbar: float, n_r: int, tol: float = 1e-12
) -> tuple[np.ndarray, float]:
    """Antenna-tied water-filling: one scalar alpha_s per symbol, P = alpha_s*Pbar.

    Subject to sum_s w_s alpha_s = 1.  Returns (alpha of shape (S,), lambda),
    lambda being the shadow price of the power budget n_t * Pbar.
    """
    weights = np.asarray(weights, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    a = np.ones_like(coeffs)
    c = coeffs * pbar
    alpha, nu = _grouped_waterfill(a, c, weights, 1.0, tol)
    n_t = coeffs.shape[1]
    return alpha, nu / (n_r * LN2 * n_t * pbar)


# ---------------------------------------------------------------------------
# best-response dynamics


def _response_coeffs(
    profile: UiuProfile,
    rho: float,
    coord: CoordinationDistribution,
    P: np.ndarray,
    k: int,
    cfg: SolverConfig,
) -> np.ndarray:
    """Water-filling coefficients (N+1)*rho*gamma_k per (symbol, mode)."""
    S = coord.n_symbols
    coeffs = np.empty((S, profile.n_t))
    for s in range(S):
        if coord.mode == "sic":
            fp = sic_signal_fp(profile, rho, coord.orders[s], k, P[:, s, :], cfg)
        else:
            fp = sud_signal_fp(profile, rho, P[:, 0, :], cfg)
        coeffs[s] = fp.scale * rho * fp.gamma_for(k)
    return coeffs


def _respond(
    profile: UiuProfile,
    rho: float,
    coord: CoordinationDistribution,
    P: np.ndarray,
    k: int,
    budget_k: float,
    cfg: NeConfig,
) -> tuple[np.ndarray, float]:
    """One best-response step for user k; returns (new P_k (S, n_t), lambda_k)."""
    coeffs = _response_coeffs(profile, rho, coord, P, k, cfg.fp)
    weights = coord.weights
    cap = profile.n_t * budget_k
    if cfg.pa_mode == "space_time":
        return waterfill(weights, coeffs, cap, profile.n_r, cfg.bisection_tol)
    if cfg.pa_mode == "spatial_only":
        Pj, lam = spatial_waterfill(weights, coeffs, cap, profile.n_r, cfg.bisection_tol)
        return np.broadcast_to(Pj, coeffs.shape).copy(), lam
    alpha, lam = temporal_waterfill(weights, coeffs, budget_k, profile.n_r, cfg.bisection_tol)
    return np.broadcast_to(alpha[:, None] * budget_k, coeffs.shape).copy(), lam


def _utilities(profile, rho, coord, P, cfg) -> np.ndarray:
    rates = np.empty(profile.K)
    for k in range(profile.K):
        if coord.mode == "sic":
            rates[k] = approx_utility_sic(profile, rho, coord, P, k, cfg)
        else:
            rates[k] = approx_utility_sud(profile, rho, k, P[:, 0, :], cfg)
    return rates


def best_response_ne(
    profile: UiuProfile,
    rho: float,
    coord: CoordinationDistribution,
    budgets,
    cfg: NeConfig | None = None,
    initial: SpaceTimePowerProfile | None = None,
    reverse_cycle: bool = False,
) -> EquilibriumResult:
    """Round-robin best responses until the largest power change is below
    cfg.outer_tol.  Exceeding max_rounds returns the last iterate flagged
    non-converged instead of raising."""
    cfg = cfg or NeConfig()
    budgets = np.asarray(budgets, dtype=float)
    K, n_t, n_r = profile.K, profile.n_t, profile.n_r
    if cfg.pa_mode != "space_time" and coord.mode != "sic":
        raise ValueError("constrained PA modes are defined for SIC coordination only")

    if initial is None:
        powers = uniform_powers(coord, K, n_t, budgets)
    else:
        initial.validate()
        powers = SpaceTimePowerProfile(coord=coord, P=initial.P.copy(), budgets=budgets)
    P = powers.P
    lambdas = np.zeros(K)
    cycle = range(K - 1, -1, -1) if reverse_cycle else range(K)

    # Relaxed (Mann) best-response updates with Aitken extrapolation over the
    # slow linear phase.  Convergence is declared only on the raw
    # best-response gap, so a converged point is a best-response fixed point
    # regardless of the step size or any extrapolation jump.  Halving the
    # relaxation on stalled progress breaks the 2-cycles the restricted PA
    # games can produce; the extrapolation cuts through the ~0.98/round
    # contraction that multi-user order mixtures exhibit.
    relax = 1.0
    prev_change = math.inf
    prev_step = None
    ratio_history: list[float] = []
    converged = False
    rounds = cfg.max_rounds
    for rnd in range(1, cfg.max_rounds + 1):
        before = P.copy()
        max_change = 0.0
        for k in cycle:
            br_k, lambdas[k] = _respond(profile, rho, coord, P, k, budgets[k], cfg)
            max_change = max(max_change, float(np.max(np.abs(br_k - P[k]))))
            P[k] = P[k] + relax * (br_k - P[k])
        if max_change < cfg.outer_tol:
            converged = True
            rounds = rnd
            break
        if max_change >= prev_change:
            relax = max(relax / 2.0, 2.0**-7)
        prev_change = max_change

        step = P - before
        if prev_step is not None and relax == 1.0:
            num = float(np.linalg.norm(step))
            den = float(np.linalg.norm(prev_step))
            cos = float(np.vdot(step, prev_step).real) / max(num * den, 1e-300)
            # signed contraction factor of the dominant mode; negative means
            # an alternating mode (steps flip direction every round)
            lam = cos * num / max(den, 1e-300)
            if 0.2 < abs(lam) < 0.995 and abs(cos) > 0.99:
                ratio_history.append(lam)
            else:
                ratio_history.clear()
            tail = ratio_history[-3:]
            if len(tail) == 3 and max(tail) - min(tail) < 0.02:
                lam = tail[-1]
                np.maximum(P + step * (lam / (1.0 - lam)), 0.0, out=P)
                ratio_history.clear()
                prev_step = None
                prev_change = math.inf
                continue
        prev_step = step

    result_powers = SpaceTimePowerProfile(coord=coord, P=P, budgets=budgets)
    rates = _utilities(profile, rho, coord, P, cfg.fp)
    slack = np.array(
        [n_t * budgets[k] - result_powers.averaged_trace(k) for k in range(K)]
    )
    kkt = None
    if cfg.pa_mode == "space_time":
        ctx = GameContext(profile=profile, rho=rho, coord=coord)
        kkt = kkt_residual(ctx, result_powers, lambdas, cfg.fp)
    return EquilibriumResult(
        powers=result_powers,
        lambdas=lambdas.copy(),
        rates=rates,
        sum_rate=float(rates.sum()),
        n_r=n_r,
        outer_iterations=rounds,
        slack=slack,
        kkt=kkt,
        converged=converged,
    )


def constrained_ne(
    profile: UiuProfile,
    rho: float,
    coord: CoordinationDistribution,
    budgets,
    cfg: NeConfig,
    initial: SpaceTimePowerProfile | None = None,
) -> EquilibriumResult:
    """Equilibrium of the spatial-only or temporal-only restricted game."""
    if cfg.pa_mode == "space_time":
        raise ValueError("constrained_ne requires pa_mode spatial_only or temporal_only")
    return best_response_ne(profile, rho, coord, budgets, cfg, initial)


def ne_high_snr(
    profile: UiuProfile, coord: CoordinationDistribution, budgets
) -> SpaceTimePowerProfile:
    """High-SNR equilibrium: uniform power, budget-tight for every order."""
    return uniform_powers(coord, profile.K, profile.n_t, np.asarray(budgets, dtype=float))


def ne_low_snr(
    profile: UiuProfile, budgets, coord: CoordinationDistribution
) -> SpaceTimePowerProfile:
    """Low-SNR equilibrium: beamform the whole budget on the argmax-column mode.

    The averaged power lands on j* = argmax_j sum_i sigma_k(i,j) (lowest index
    on ties) and is split equally across the coordination symbols.
    """
    budgets = np.asarray(budgets, dtype=float)
    K, n_t = profile.K, profile.n_t
    P = np.zeros((K, coord.n_symbols, n_t))
    for k in range(K):
        j_star = int(np.argmax(profile.sigma[k].sum(axis=0)))
        P[k, :, j_star] = n_t * budgets[k]
    return SpaceTimePowerProfile(coord=coord, P=P, budgets=budgets)


def random_feasible_powers(
    coord: CoordinationDistribution,
    K: int,
    n_t: int,
    budgets,
    rng: np.random.Generator,
) -> SpaceTimePowerProfile:
    """Random budget-tight strategy profile, for multi-start uniqueness checks."""
    budgets = np.asarray(budgets, dtype=float)
    P = rng.uniform(0.1, 1.0, size=(K, coord.n_symbols, n_t))
    w = coord.weights
    for k in range(K):
        P[k] *= n_t * budgets[k] / float(w @ P[k].sum(axis=1))
    return SpaceTimePowerProfile(coord=coord, P=P, budgets=budgets)


# ---------------------------------------------------------------------------
# centralized benchmark


def sum_capacity(
    profile: UiuProfile, rho: float, budgets, cfg: NeConfig | None = None
) -> CapacityResult:
    """Centralized sum-capacity via cyclic water-filling on the all-users block.

    The objective is the deterministic equivalent of E log2|I + rho sum_k
    H_k Q_k H_k^H| (the common team utility), concave in each user's powers;
    each pass water-fills one user against the all-users gamma/delta system.
    """
    cfg = cfg or NeConfig()
    budgets = np.asarray(budgets, dtype=float)
    K, n_t, n_r = profile.K, profile.n_t, profile.n_r
    P = np.broadcast_to(budgets[:, None], (K, n_t)).copy()
    one = np.ones(1)

    converged = False
    rounds = cfg.max_rounds
    for rnd in range(1, cfg.max_rounds + 1):
        max_change = 0.0
        for k in range(K):
            fp = sud_signal_fp(profile, rho, P, cfg.fp)
            coeffs = (fp.scale * rho * fp.gamma_for(k))[None, :]
            new_Pk, _ = waterfill(one, coeffs, n_t * budgets[k], n_r, cfg.bisection_tol)
            max_change = max(max_change, float(np.max(np.abs(new_Pk[0] - P[k]))))
            P[k] = new_Pk[0]
        if max_change < cfg.outer_tol:
            converged = True
            rounds = rnd
            break

    fp = sud_signal_fp(profile, rho, P, cfg.fp)
    value = _block_rate_for(profile, rho, P, fp)
    return CapacityResult(
        powers=P, value=value, n_r=n_r, outer_iterations=rounds, converged=converged
    )


def sre(ne_sum_rate: float, capacity: float) -> float:
    """Sum-rate efficiency: NE sum-rate over centralized sum-capacity.

    Ratios inside (1, 1 + 1e-6] are numeric noise and clamp to 1; anything
    larger signals an inconsistent pair of solves.
    """
    if capacity <= 0:
        raise ValueError("capacity must be positive")
    ratio = ne_sum_rate / capacity
    if ratio > 1.0 + SRE_SLACK:
        raise ValueError(f"sum-rate exceeds capacity beyond tolerance: SRE = {ratio}")
    return min(ratio, 1.0)
