"""Large-system (deterministic-equivalent) rate evaluation.

Every ergodic log-det block is approximated by the same three-term functional
of two coupled parameter families (gamma, delta), solved as a fixed point:

    gamma_l(j) = (1/(c*n_t)) sum_i sigma_l(i,j) / (1 + q_i),
    q_i        = (1/(c*n_t)) sum_{r,m} sigma_r(i,m) delta_r(m),
    delta_l(j) = c*rho*P_l(j) / (1 + c*rho*P_l(j)*gamma_l(j)),

where the block runs over a user subset and c is its multiplicity factor
(N+1 for a SIC signal block, N for its interference block, K and K-1 for
SUD).  The fixed-point equations are exactly the stationarity conditions of
the rate functional in (gamma, delta), which is what makes the closed-form
power gradients used for water-filling and KKT checks valid.

All rates returned here carry the 1/n_r normalization; use
:func:`denormalize` to compare with the raw Monte-Carlo rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import UiuProfile
from .coordination import CoordinationDistribution, DecodingOrder

__all__ = [
    "SolverConfig",
    "BlockFixedPoint",
    "FixedPointError",
    "solve_block_fp",
    "block_rate",
    "sic_signal_fp",
    "sic_interference_fp",
    "approx_rate_sic",
    "approx_utility_sic",
    "sud_signal_fp",
    "sud_interference_fp",
    "solve_sud_fps",
    "approx_utility_sud",
    "denormalize",
]

LOG2E = math.log2(math.e)
MIN_DAMPING = 2.0**-10


@dataclass
class SolverConfig:
    """Fixed-point iteration controls."""

    tol: float = 1e-10
    max_iter: int = 10_000
    damping: float = 1.0

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must be in (0, 1]")


class FixedPointError(RuntimeError):
    """Fixed-point iteration failed to converge; carries the residual tail."""

    def __init__(self, message: str, residuals):
        super().__init__(message)
        self.residuals = list(residuals)


@dataclass
class BlockFixedPoint:
    """Converged (gamma, delta) parameters of one user block.

    For an interference block these are the phi/psi parameters; the equations
    are identical with the block's own multiplicity factor.
    """

    users: tuple[int, ...]
    scale: int
    gamma: np.ndarray
    delta: np.ndarray
    iterations: int
    residual: float

    @property
    def empty(self) -> bool:
        return len(self.users) == 0

    def gamma_for(self, user: int) -> np.ndarray:
        return self.gamma[self.users.index(user)]

    def delta_for(self, user: int) -> np.ndarray:
        return self.delta[self.users.index(user)]


def _empty_fp() -> BlockFixedPoint:
    z = np.zeros((0, 0))
    return BlockFixedPoint(users=(), scale=0, gamma=z, delta=z, iterations=0, residual=0.0)


def _gamma_map(sigma: np.ndarray, delta: np.ndarray, c: int) -> np.ndarray:
    n_t = sigma.shape[2]
    q = np.einsum("rim,rm->i", sigma, delta) / (c * n_t)
    return np.einsum("i,lij->lj", 1.0 / (1.0 + q), sigma) / (c * n_t)


def _delta_map(gamma: np.ndarray, rho: float, P: np.ndarray, c: int) -> np.ndarray:
    a = c * rho * P
    return a / (1.0 + a * gamma)


def solve_block_fp(
    sigma: np.ndarray,
    rho: float,
    P: np.ndarray,
    c: int,
    cfg: SolverConfig | None = None,
) -> BlockFixedPoint:
    """Solve the (gamma, delta) system for one block.

    sigma: (m, n_r, n_t) variance profiles of the block users, P: (m, n_t)
    their mode powers, c: the block multiplicity factor.  Picard iteration
    from delta = 0, damping halved whenever the residual increases.
    """
    cfg = cfg or SolverConfig()
    m = sigma.shape[0]
    if m == 0:
        return _empty_fp()
    if np.any(P < 0):
        raise ValueError("mode powers must be nonnegative")

    # Iterate the composed map gamma <- G(D(gamma)) starting from delta = 0.
    # gamma stays bounded in [0, colsum/(c*n_t)] (delta itself scales with
    # c*rho*P and is recovered exactly as D(gamma) at the end), and the
    # composed map is monotone, so plain Picard converges from this start.
    gamma = _gamma_map(sigma, np.zeros_like(P, dtype=float), c)
    alpha = cfg.damping
    prev_res = math.inf
    history: list[float] = []
    iterations = cfg.max_iter
    for it in range(1, cfg.max_iter + 1):
        delta = _delta_map(gamma, rho, P, c)
        gamma_prop = _gamma_map(sigma, delta, c)
        res = float(np.max(np.abs(gamma_prop - gamma)))
        gamma = gamma + alpha * (gamma_prop - gamma)
        history.append(res)
        if res < cfg.tol:
            iterations = it
            break
        if res > prev_res:
            alpha = max(alpha / 2.0, MIN_DAMPING)
        prev_res = res
    else:
        raise FixedPointError(
            f"no convergence in {cfg.max_iter} iterations "
            f"(last residuals {[f'{r:.3e}' for r in history[-5:]]})",
            history,
        )

    # self-consistency: the delta equation holds exactly by construction,
    # the gamma equation up to the reported residual
    delta = _delta_map(gamma, rho, P, c)
    residual = float(np.max(np.abs(_gamma_map(sigma, delta, c) - gamma)))
    return BlockFixedPoint(
        users=tuple(range(m)),
        scale=c,
        gamma=gamma,
        delta=delta,
        iterations=iterations,
        residual=residual,
    )


def block_rate(sigma: np.ndarray, rho: float, P: np.ndarray, fp: BlockFixedPoint) -> float:
    """Deterministic equivalent of (1/n_r) E log2|I + rho sum_block H_l Q_l H_l^H|."""
    if fp.empty:
        return 0.0
    c = fp.scale
    n_r, n_t = sigma.shape[1], sigma.shape[2]
    a = c * rho * P
    term1 = float(np.sum(np.log2(1.0 + a * fp.gamma)))
    q = np.einsum("rim,rm->i", sigma, fp.delta) / (c * n_t)
    term2 = float(np.sum(np.log2(1.0 + q)))
    term3 = LOG2E * float(np.sum(fp.gamma * fp.delta))
    return (term1 + term2 - term3) / n_r


def _subset(users, profile: UiuProfile, P: np.ndarray):
    idx = list(users)
    return profile.sigma[idx], P[idx]


def _block_rate_for(profile: UiuProfile, rho: float, P: np.ndarray, fp: BlockFixedPoint) -> float:
    if fp.empty:
        return 0.0
    sig, Pb = _subset(fp.users, profile, P)
    return block_rate(sig, rho, Pb, fp)


def _solve_subset(
    profile: UiuProfile, rho: float, users, P: np.ndarray, cfg: SolverConfig | None
) -> BlockFixedPoint:
    users = tuple(users)
    if not users:
        return _empty_fp()
    sig, Pb = _subset(users, profile, P)
    fp = solve_block_fp(sig, rho, Pb, len(users), cfg)
    fp.users = users
    return fp


def sic_signal_fp(
    profile: UiuProfile,
    rho: float,
    order: DecodingOrder,
    k: int,
    P: np.ndarray,
    cfg: SolverConfig | None = None,
) -> BlockFixedPoint:
    """gamma/delta block for user k's SIC signal term: k plus everyone decoded
    after k, multiplicity N_k+1.  P is the per-order power table (K, n_t)."""
    users = (k,) + order.decoded_after(k)
    return _solve_subset(profile, rho, sorted(users), P, cfg)


def sic_interference_fp(
    profile: UiuProfile,
    rho: float,
    order: DecodingOrder,
    k: int,
    P: np.ndarray,
    cfg: SolverConfig | None = None,
) -> BlockFixedPoint:
    """phi/psi block for user k's residual interference (empty when k is
    decoded last, in which case the interference rate terms are zero)."""
    return _solve_subset(profile, rho, sorted(order.decoded_after(k)), P, cfg)


def approx_rate_sic(
    profile: UiuProfile,
    rho: float,
    order: DecodingOrder,
    k: int,
    P: np.ndarray,
    cfg: SolverConfig | None = None,
) -> float:
    """Large-system SIC rate of user k under one order, normalized by n_r."""
    sig_fp = sic_signal_fp(profile, rho, order, k, P, cfg)
    int_fp = sic_interference_fp(profile, rho, order, k, P, cfg)
    return _block_rate_for(profile, rho, P, sig_fp) - _block_rate_for(profile, rho, P, int_fp)


def approx_utility_sic(
    profile: UiuProfile,
    rho: float,
    coord: CoordinationDistribution,
    P: np.ndarray,
    k: int,
    cfg: SolverConfig | None = None,
) -> float:
    """Coordination-averaged large-system SIC utility; P has shape (K, S, n_t)."""
    total = 0.0
    for s, order in enumerate(coord.orders):
        p = coord.probs[s]
        if p == 0.0:
            continue
        total += p * approx_rate_sic(profile, rho, order, k, P[:, s, :], cfg)
    return total


def sud_signal_fp(
    profile: UiuProfile, rho: float, P: np.ndarray, cfg: SolverConfig | None = None
) -> BlockFixedPoint:
    """All-users gamma/delta block with multiplicity K; P is (K, n_t)."""
    return _solve_subset(profile, rho, range(profile.K), P, cfg)


def sud_interference_fp(
    profile: UiuProfile, rho: float, k: int, P: np.ndarray, cfg: SolverConfig | None = None
) -> BlockFixedPoint:
    """Interferer phi/psi block with multiplicity K-1 (empty for K=1)."""
    users = [u for u in range(profile.K) if u != k]
    return _solve_subset(profile, rho, users, P, cfg)


def solve_sud_fps(
    profile: UiuProfile, rho: float, k: int, P: np.ndarray, cfg: SolverConfig | None = None
) -> tuple[BlockFixedPoint, BlockFixedPoint]:
    """Both SUD fixed-point blocks for user k."""
    return sud_signal_fp(profile, rho, P, cfg), sud_interference_fp(profile, rho, k, P, cfg)


def approx_utility_sud(
    profile: UiuProfile, rho: float, k: int, P: np.ndarray, cfg: SolverConfig | None = None
) -> float:
    """Large-system SUD utility of user k, normalized by n_r; P is (K, n_t)."""
    sig_fp, int_fp = solve_sud_fps(profile, rho, k, P, cfg)
    return _block_rate_for(profile, rho, P, sig_fp) - _block_rate_for(profile, rho, P, int_fp)


def denormalize(rate: float, n_r: int) -> float:
    """Rescale a 1/n_r-normalized rate to raw bits/s/Hz."""
    return rate * n_r
