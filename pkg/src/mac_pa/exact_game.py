"""Monte-Carlo evaluation of the exact game utilities and numeric probes.

Rates are reported raw, in bits/s/Hz (no 1/n_r normalization); the
large-system approximations in :mod:`mac_pa.large_system` carry the 1/n_r
factor and must be rescaled by n_r before comparison.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSamples
from .coordination import (
    DecodingOrder,
    GameContext,
    SpaceTimePowerProfile,
)
from . import large_system

__all__ = [
    "McEstimate",
    "KktReport",
    "logdet2_eye_plus",
    "rate_sic_exact",
    "rate_sic_draws",
    "utility_sic",
    "utility_sic_draws",
    "rate_sud_exact",
    "rate_sud_draws",
    "sum_rate_exact",
    "trace_inequality_gap",
    "dsc_gap",
    "concavity_second_derivative",
    "kkt_residual",
]

LN2 = math.log(2.0)
JITTER = 1e-12


@dataclass
class McEstimate:
    """Monte-Carlo estimate with its standard error."""

    value: float
    stderr: float
    count: int


def _estimate(values: np.ndarray) -> McEstimate:
    values = np.asarray(values, dtype=float)
    n = values.size
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return McEstimate(value=float(values.mean()), stderr=se, count=n)


def logdet2_eye_plus(S: np.ndarray) -> float:
    """log2 |I + S| for Hermitian PSD S, via Cholesky.

    A Cholesky failure (borderline indefiniteness from rounding) triggers a
    single retry with a 1e-12 diagonal jitter and a warning.
    """
    M = np.eye(S.shape[0], dtype=complex) + S
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        warnings.warn("Cholesky failed on I + PSD sum; retrying with 1e-12 jitter")
        L = np.linalg.cholesky(M + JITTER * np.eye(S.shape[0]))
    diag = np.real(np.diagonal(L))
    if np.any(~np.isfinite(diag)) or np.any(diag <= 0):
        raise ValueError("singular or non-finite determinant; malformed inputs")
    return 2.0 * float(np.sum(np.log(diag))) / LN2


def _Q_matrices(profile_W: np.ndarray, P_slice: np.ndarray) -> list[np.ndarray]:
    """Covariances Q_k = W_k diag(P_k) W_k^H from per-mode powers (K, n_t)."""
    return [
        profile_W[k] @ np.diag(P_slice[k]) @ profile_W[k].conj().T
        for k in range(P_slice.shape[0])
    ]


def _signal_terms(rho: float, H_row: np.ndarray, Q_list) -> list[np.ndarray]:
    """rho * H_k Q_k H_k^H for every user of one draw."""
    return [rho * H_row[k] @ Q_list[k] @ H_row[k].conj().T for k in range(len(Q_list))]


def rate_sic_draws(
    rho: float, samples: ChannelSamples, Q_list, k: int, after
) -> np.ndarray:
    """Per-draw SIC rate of user k with interferers ``after`` (raw bits/s/Hz)."""
    vals = np.empty(samples.count)
    for d in range(samples.count):
        H = samples.draws[d]
        A = _signal_terms(rho, H, Q_list)
        interf = sum((A[u] for u in after), np.zeros_like(A[k]))
        vals[d] = logdet2_eye_plus(A[k] + interf) - logdet2_eye_plus(interf)
    return vals


def rate_sud_draws(rho: float, samples: ChannelSamples, Q_list, k: int) -> np.ndarray:
    """Per-draw SUD rate of user k: all other users are noise."""
    vals = np.empty(samples.count)
    for d in range(samples.count):
        H = samples.draws[d]
        A = _signal_terms(rho, H, Q_list)
        interf = sum((A[u] for u in range(len(Q_list)) if u != k), np.zeros_like(A[k]))
        vals[d] = logdet2_eye_plus(A[k] + interf) - logdet2_eye_plus(interf)
    return vals


def rate_sic_exact(
    ctx: GameContext,
    order: DecodingOrder,
    powers: SpaceTimePowerProfile,
    k: int,
    samples: ChannelSamples,
) -> McEstimate:
    """Monte-Carlo SIC rate of user k under a fixed decoding order."""
    powers.validate()
    s = ctx.coord.orders.index(order)
    Q = _Q_matrices(ctx.profile.W, powers.P[:, s, :])
    return _estimate(rate_sic_draws(ctx.rho, samples, Q, k, order.decoded_after(k)))


def utility_sic_draws(
    ctx: GameContext, powers: SpaceTimePowerProfile, k: int, samples: ChannelSamples
) -> np.ndarray:
    """Per-draw SIC utility of user k: coordination-weighted order rates."""
    total = np.zeros(samples.count)
    for s, order in enumerate(ctx.coord.orders):
        p = ctx.coord.probs[s]
        if p == 0.0:
            continue
        Q = _Q_matrices(ctx.profile.W, powers.P[:, s, :])
        total += p * rate_sic_draws(ctx.rho, samples, Q, k, order.decoded_after(k))
    return total


def utility_sic(
    ctx: GameContext, powers: SpaceTimePowerProfile, k: int, samples: ChannelSamples
) -> McEstimate:
    powers.validate()
    return _estimate(utility_sic_draws(ctx, powers, k, samples))


def rate_sud_exact(
    ctx: GameContext, powers: SpaceTimePowerProfile, k: int, samples: ChannelSamples
) -> McEstimate:
    """Monte-Carlo SUD rate of user k (single-symbol power profile)."""
    powers.validate()
    Q = _Q_matrices(ctx.profile.W, powers.P[:, 0, :])
    return _estimate(rate_sud_draws(ctx.rho, samples, Q, k))


def sum_rate_exact(
    ctx: GameContext,
    powers: SpaceTimePowerProfile,
    samples: ChannelSamples,
    scheme: str | None = None,
) -> McEstimate:
    """Monte-Carlo network sum-rate: sum over users of the per-user utility."""
    powers.validate()
    scheme = scheme or ctx.coord.mode
    K = ctx.profile.K
    total = np.zeros(samples.count)
    if scheme == "sic":
        for k in range(K):
            total += utility_sic_draws(ctx, powers, k, samples)
    elif scheme == "sud":
        Q = _Q_matrices(ctx.profile.W, powers.P[:, 0, :])
        for k in range(K):
            total += rate_sud_draws(ctx.rho, samples, Q, k)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return _estimate(total)


def _check_hermitian(M: np.ndarray, name: str, tol: float = 1e-10) -> None:
    if np.max(np.abs(M - M.conj().T)) > tol:
        raise ValueError(f"{name} is not Hermitian")


def trace_inequality_gap(A_list, B_list) -> float:
    """sum_i Tr{(A_i - B_i)[(sum_{j<=i} B_j)^-1 - (sum_{j<=i} A_j)^-1]}.

    Nonnegative for A_1, B_1 positive definite and the remaining blocks PSD,
    with equality iff A_i = B_i for every i.
    """
    if len(A_list) != len(B_list) or not A_list:
        raise ValueError("A_list and B_list must be nonempty and of equal length")
    for i, (A, B) in enumerate(zip(A_list, B_list)):
        _check_hermitian(A, f"A[{i}]")
        _check_hermitian(B, f"B[{i}]")
    n = A_list[0].shape[0]
    eye = np.eye(n, dtype=complex)
    sum_A = np.zeros((n, n), dtype=complex)
    sum_B = np.zeros((n, n), dtype=complex)
    gap = 0.0
    for A, B in zip(A_list, B_list):
        sum_A = sum_A + A
        sum_B = sum_B + B
        inv_B = np.linalg.solve(sum_B, eye)
        inv_A = np.linalg.solve(sum_A, eye)
        gap += float(np.real(np.trace((A - B) @ (inv_B - inv_A))))
    return gap


def _dsc_order_term(rho, H_row, Qa, Qb, order) -> float:
    """Per-draw, per-order DSC term with users taken in decoding-rank order."""
    seq = order.sequence()
    A = _signal_terms(rho, H_row, Qa)
    B = _signal_terms(rho, H_row, Qb)
    n = A[0].shape[0]
    eye = np.eye(n, dtype=complex)
    term = 0.0
    for r in range(len(seq)):
        tail = seq[r:]
        S_a = eye + sum((A[u] for u in tail), np.zeros_like(A[0]))
        S_b = eye + sum((B[u] for u in tail), np.zeros_like(B[0]))
        u = seq[r]
        diff = B[u] - A[u]
        term += float(np.real(np.trace(diff @ (np.linalg.inv(S_a) - np.linalg.inv(S_b)))))
    return term


def dsc_gap(
    ctx: GameContext,
    powersA: SpaceTimePowerProfile,
    powersB: SpaceTimePowerProfile,
    samples: ChannelSamples,
) -> McEstimate:
    """Monte-Carlo estimate of the diagonally-strict-concavity gap.

    The gap is the coordination-weighted sum over orders of the rank-ordered
    trace terms; it is nonnegative per draw and strictly positive whenever the
    two strategy profiles differ on an order with positive probability.
    """
    powersA.validate()
    powersB.validate()
    vals = np.zeros(samples.count)
    for s, order in enumerate(ctx.coord.orders):
        p = ctx.coord.probs[s]
        if p == 0.0:
            continue
        Qa = _Q_matrices(ctx.profile.W, powersA.P[:, s, :])
        Qb = _Q_matrices(ctx.profile.W, powersB.P[:, s, :])
        for d in range(samples.count):
            vals[d] += p * _dsc_order_term(ctx.rho, samples.draws[d], Qa, Qb, order)
    return _estimate(vals)


def concavity_second_derivative(
    ctx: GameContext,
    order: DecodingOrder,
    powers: SpaceTimePowerProfile,
    k: int,
    Q_start: np.ndarray,
    Q_end: np.ndarray,
    lam: float,
    samples: ChannelSamples,
) -> McEstimate:
    """Second derivative of user k's order rate along Q(lam) = lam*Q_start + (1-lam)*Q_end.

    Other users keep the powers of ``powers`` for this order.  The value is
    -log2(e) * rho^2 * E Tr[(H^H M^-1 H dQ)^2] <= 0, in bits.
    """
    s = ctx.coord.orders.index(order)
    Q_others = _Q_matrices(ctx.profile.W, powers.P[:, s, :])
    dQ = Q_start - Q_end
    Qk = Q_end + lam * dQ
    after = order.decoded_after(k)
    vals = np.empty(samples.count)
    n_r = ctx.profile.n_r
    eye = np.eye(n_r, dtype=complex)
    for d in range(samples.count):
        H = samples.draws[d]
        Hk = H[k]
        M = eye + ctx.rho * Hk @ Qk @ Hk.conj().T
        for u in after:
            M = M + ctx.rho * H[u] @ Q_others[u] @ H[u].conj().T
        G = Hk.conj().T @ np.linalg.solve(M, Hk)
        T = G @ dQ
        vals[d] = -math.log2(math.e) * ctx.rho**2 * float(np.real(np.trace(T @ T)))
    return _estimate(vals)


@dataclass
class KktReport:
    """Per-user equilibrium optimality residuals.

    stationarity[k]: worst gradient defect over (symbol, mode): the absolute
    residual on active modes, the positive-part violation on inactive ones.
    comp_slackness[k]: lambda_k times the budget slack.
    slack[k]: remaining averaged-trace budget (negative means infeasible).
    """

    stationarity: np.ndarray
    comp_slackness: np.ndarray
    slack: np.ndarray

    @property
    def max_residual(self) -> float:
        return float(max(self.stationarity.max(), np.abs(self.comp_slackness).max()))


ACTIVE_TOL = 1e-12


def kkt_residual(
    ctx: GameContext,
    powers: SpaceTimePowerProfile,
    lambdas,
    cfg: "large_system.SolverConfig | None" = None,
) -> KktReport:
    """Check the water-filling optimality conditions at a strategy profile.

    Gradients are the closed-form derivatives of the deterministic-equivalent
    utility, with the fixed points re-solved at the given powers; lambdas are
    the multipliers of the (1/n_r)-normalized utilities.
    """
    powers.validate()
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(lambdas < 0):
        raise ValueError("Lagrange multipliers must be nonnegative")
    cfg = cfg or large_system.SolverConfig()
    profile, rho, coord = ctx.profile, ctx.rho, ctx.coord
    K, n_r = profile.K, profile.n_r

    stationarity = np.zeros(K)
    slack = np.zeros(K)
    comp = np.zeros(K)
    for k in range(K):
        worst = 0.0
        for s in range(coord.n_symbols):
            if coord.mode == "sic":
                order = coord.orders[s]
                p = coord.probs[s]
                fp = large_system.sic_signal_fp(profile, rho, order, k, powers.P[:, s, :], cfg)
            else:
                p = 1.0
                fp = large_system.sud_signal_fp(profile, rho, powers.P[:, 0, :], cfg)
            gamma_k = fp.gamma_for(k)
            c = fp.scale
            for j in range(profile.n_t):
                P = powers.P[k, s, j]
                grad = p * c * rho * gamma_k[j] / (n_r * LN2 * (1.0 + c * rho * P * gamma_k[j]))
                target = p * lambdas[k]
                if P > ACTIVE_TOL:
                    worst = max(worst, abs(grad - target))
                else:
                    worst = max(worst, max(grad - target, 0.0))
        stationarity[k] = worst
        slack[k] = profile.n_t * powers.budgets[k] - powers.averaged_trace(k)
        comp[k] = lambdas[k] * slack[k]
    return KktReport(stationarity=stationarity, comp_slackness=comp, slack=slack)
