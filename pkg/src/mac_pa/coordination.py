"""Decoding orders, the coordination signal law and game strategy profiles."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .channel import UiuProfile

__all__ = [
    "DecodingOrder",
    "CoordinationDistribution",
    "SpaceTimePowerProfile",
    "GameContext",
    "uniform_powers",
]

PROB_TOL = 1e-12
BUDGET_TOL = 1e-9


@dataclass(frozen=True)
class DecodingOrder:
    """A decoding order for K users.

    ranks[k] is the 0-based decode position of user k: the user with rank 0 is
    decoded first (sees everyone as interference), the user with rank K-1 is
    decoded last (interference-free).
    """

    ranks: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.ranks) != list(range(len(self.ranks))):
            raise ValueError(f"ranks must be a permutation of 0..K-1, got {self.ranks}")

    @classmethod
    def from_sequence(cls, seq) -> "DecodingOrder":
        """Build from a decode sequence: seq[r] is the user decoded at position r."""
        ranks = [0] * len(seq)
        for r, user in enumerate(seq):
            ranks[user] = r
        return cls(tuple(ranks))

    @property
    def K(self) -> int:
        return len(self.ranks)

    def rank(self, k: int) -> int:
        return self.ranks[k]

    def user_at(self, r: int) -> int:
        """Inverse permutation: the user decoded at position r."""
        return self.ranks.index(r)

    def sequence(self) -> tuple[int, ...]:
        return tuple(self.ranks.index(r) for r in range(self.K))

    def decoded_after(self, k: int) -> tuple[int, ...]:
        """Users still undecoded when user k is decoded (k's interferers)."""
        rk = self.ranks[k]
        return tuple(u for u in range(self.K) if self.ranks[u] > rk)


@dataclass(frozen=True)
class CoordinationDistribution:
    """Law of the coordination signal: SIC with probabilities over orders, or SUD."""

    mode: str
    orders: tuple[DecodingOrder, ...] = ()
    probs: tuple[float, ...] = ()

    def __post_init__(self):
        if self.mode not in ("sic", "sud"):
            raise ValueError(f"mode must be 'sic' or 'sud', got {self.mode!r}")
        if self.mode == "sud":
            if self.orders or self.probs:
                raise ValueError("SUD coordination carries no decoding orders")
            return
        if len(self.orders) != len(self.probs) or not self.orders:
            raise ValueError("SIC coordination needs matching orders and probs")
        if any(p < 0 for p in self.probs):
            raise ValueError("order probabilities must be nonnegative")
        if abs(sum(self.probs) - 1.0) > PROB_TOL:
            raise ValueError(f"order probabilities must sum to 1, got {sum(self.probs)}")
        K = self.orders[0].K
        if any(o.K != K for o in self.orders):
            raise ValueError("all orders must have the same number of users")

    @property
    def n_symbols(self) -> int:
        return len(self.orders) if self.mode == "sic" else 1

    @property
    def weights(self) -> np.ndarray:
        """Symbol probabilities aligned with the power-profile symbol axis."""
        if self.mode == "sud":
            return np.array([1.0])
        return np.asarray(self.probs)

    @classmethod
    def sud(cls) -> "CoordinationDistribution":
        return cls(mode="sud")

    @classmethod
    def single_order(cls, order: DecodingOrder) -> "CoordinationDistribution":
        return cls(mode="sic", orders=(order,), probs=(1.0,))

    @classmethod
    def fair_sic(cls, K: int) -> "CoordinationDistribution":
        """Uniform distribution over all K! decoding orders."""
        orders = tuple(
            DecodingOrder.from_sequence(seq) for seq in itertools.permutations(range(K))
        )
        p = 1.0 / len(orders)
        return cls(mode="sic", orders=orders, probs=(p,) * len(orders))

    @classmethod
    def two_user_sic(cls, p: float) -> "CoordinationDistribution":
        """K=2 coordination: p is the probability that user 0 is decoded
        second, i.e. last and therefore interference-free."""
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {p}")
        user0_last = DecodingOrder.from_sequence((1, 0))
        user0_first = DecodingOrder.from_sequence((0, 1))
        return cls(mode="sic", orders=(user0_last, user0_first), probs=(p, 1.0 - p))


@dataclass
class SpaceTimePowerProfile:
    """Eigenmode powers P[k, s, j] for user k, coordination symbol s, mode j.

    The symbol axis is aligned with coord.orders for SIC (a single symbol for
    SUD).  Feasibility: all entries nonnegative and the probability-averaged
    trace sum_s w_s sum_j P[k,s,j] stays within n_t * budgets[k].
    """

    coord: CoordinationDistribution
    P: np.ndarray
    budgets: np.ndarray = field(default=None)

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=float)
        if self.P.ndim != 3 or self.P.shape[1] != self.coord.n_symbols:
            raise ValueError(
                f"P must have shape (K, {self.coord.n_symbols}, n_t), got {self.P.shape}"
            )
        if self.budgets is not None:
            self.budgets = np.asarray(self.budgets, dtype=float)

    @property
    def K(self) -> int:
        return self.P.shape[0]

    @property
    def n_t(self) -> int:
        return self.P.shape[2]

    def averaged_trace(self, k: int) -> float:
        """sum_s w_s sum_j P[k,s,j], the quantity the power budget constrains."""
        return float(self.coord.weights @ self.P[k].sum(axis=1))

    def validate(self) -> None:
        if np.any(self.P < 0):
            raise ValueError("powers must be nonnegative")
        if self.budgets is None:
            return
        for k in range(self.K):
            cap = self.n_t * self.budgets[k]
            if self.averaged_trace(k) > cap + BUDGET_TOL * max(1.0, cap):
                raise ValueError(
                    f"user {k} exceeds the power budget: "
                    f"{self.averaged_trace(k):.12g} > {cap:.12g}"
                )


def uniform_powers(coord: CoordinationDistribution, K: int, n_t: int, budgets) -> SpaceTimePowerProfile:
    """Uniform allocation P[k,s,j] = budgets[k]; budget-tight for every user."""
    budgets = np.asarray(budgets, dtype=float)
    P = np.broadcast_to(budgets[:, None, None], (K, coord.n_symbols, n_t)).copy()
    return SpaceTimePowerProfile(coord=coord, P=P, budgets=budgets)


@dataclass
class GameContext:
    """Everything the game evaluation needs: statistics, SNR and coordination."""

    profile: UiuProfile
    rho: float
    coord: CoordinationDistribution

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError(f"SNR rho must be positive, got {self.rho}")
