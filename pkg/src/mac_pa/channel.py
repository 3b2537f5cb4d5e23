"""Antenna-correlation models, UIU variance profiles and channel sampling.

The statistical model used everywhere in this package is the UIU form
H_k = V Htilde_k W_k^H where V and W_k are unitary and Htilde_k has
independent zero-mean complex Gaussian entries with E|Htilde_k(i,j)|^2 =
sigma_k(i,j)/n_t.  The Kronecker model H_k = R_k^(1/2) Theta_k T_k^(1/2) is
the separable special case sigma_k(i,j) = dR_k(i) * dT_k(j).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "CorrelationSpec",
    "UiuProfile",
    "ChannelSamples",
    "exp_correlation",
    "kronecker_to_uiu",
    "exp_profile",
    "iid_profile",
    "sample_channel",
]

UNITARY_TOL = 1e-10
PSD_TOL = 1e-10


@dataclass(frozen=True)
class CorrelationSpec:
    """Exponential antenna-correlation profile M(i,j) = r^|i-j|."""

    n: int
    r: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"antenna count must be >= 1, got {self.n}")
        if not 0.0 <= self.r <= 1.0:
            raise ValueError(f"correlation coefficient must be in [0, 1], got {self.r}")


def exp_correlation(spec: CorrelationSpec) -> np.ndarray:
    """Return the n x n exponential correlation matrix M(i,j) = r^|i-j|."""
    idx = np.arange(spec.n)
    return spec.r ** np.abs(idx[:, None] - idx[None, :])


@dataclass
class UiuProfile:
    """Per-user channel statistics known to every transmitter.

    sigma : (K, n_r, n_t) nonnegative variance profile, E|Htilde(i,j)|^2 = sigma(i,j)/n_t
    W     : (K, n_t, n_t) unitary transmit eigenbases (columns are eigenvectors)
    V     : (n_r, n_r) unitary receive eigenbasis shared by all users
    """

    sigma: np.ndarray
    W: np.ndarray
    V: np.ndarray

    @property
    def K(self) -> int:
        return self.sigma.shape[0]

    @property
    def n_r(self) -> int:
        return self.sigma.shape[1]

    @property
    def n_t(self) -> int:
        return self.sigma.shape[2]

    @property
    def beta(self) -> float:
        """Receive/transmit antenna ratio n_r/n_t."""
        return self.n_r / self.n_t

    def validate(self) -> None:
        if np.any(self.sigma < 0):
            raise ValueError("variance profile has negative entries")
        eye_t = np.eye(self.n_t)
        for k in range(self.K):
            err = np.max(np.abs(self.W[k].conj().T @ self.W[k] - eye_t))
            if err > UNITARY_TOL:
                raise ValueError(f"W[{k}] is not unitary (max error {err:.2e})")
        err = np.max(np.abs(self.V.conj().T @ self.V - np.eye(self.n_r)))
        if err > UNITARY_TOL:
            raise ValueError(f"V is not unitary (max error {err:.2e})")


@dataclass
class ChannelSamples:
    """I.i.d. fading draws, draws[d, k] is the n_r x n_t matrix H_k of draw d."""

    draws: np.ndarray
    seed: int
    count: int


def _eig_descending(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vals, vecs = np.linalg.eigh(M)
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def _check_psd(M: np.ndarray, name: str) -> None:
    if np.max(np.abs(M - M.conj().T)) > PSD_TOL:
        raise ValueError(f"{name} is not Hermitian")
    if np.min(np.linalg.eigvalsh(M)) < -PSD_TOL:
        raise ValueError(f"{name} is not positive semidefinite")


def kronecker_to_uiu(R_list, T_list, offbasis_tol: float | None = 1e-6) -> UiuProfile:
    """Reduce per-user Kronecker correlation (R_k, T_k) to a UIU profile.

    All R_k must be (near) simultaneously diagonalizable: the eigenbasis of the
    first user's R is reused for every user and each R_k is projected onto it,
    d_k^R = diag(V^H R_k V).  With ``offbasis_tol`` set, inputs whose projected
    off-diagonal energy exceeds the tolerance are rejected.  Passing
    ``offbasis_tol=None`` keeps the projection and drops the check, which is the
    large-array ULA regime where all exponential Toeplitz profiles share the
    Fourier basis asymptotically.
    """
    K = len(R_list)
    if len(T_list) != K:
        raise ValueError("R_list and T_list must have the same length")
    n_r = R_list[0].shape[0]
    n_t = T_list[0].shape[0]

    for k in range(K):
        _check_psd(R_list[k], f"R[{k}]")
        _check_psd(T_list[k], f"T[{k}]")

    _, V = _eig_descending(R_list[0])
    sigma = np.empty((K, n_r, n_t))
    W = np.empty((K, n_t, n_t), dtype=V.dtype)
    for k in range(K):
        proj = V.conj().T @ R_list[k] @ V
        off = proj - np.diag(np.diag(proj))
        if offbasis_tol is not None and np.max(np.abs(off)) > offbasis_tol:
            raise ValueError(
                f"R[{k}] is not diagonal in the shared receive basis "
                f"(off-basis energy {np.max(np.abs(off)):.2e} > {offbasis_tol:.0e})"
            )
        dR = np.real(np.diag(proj))
        dT, W_k = _eig_descending(T_list[k])
        dR = np.maximum(dR, 0.0)
        dT = np.maximum(dT, 0.0)
        sigma[k] = np.outer(dR, dT)
        W[k] = W_k
    return UiuProfile(sigma=sigma, W=W, V=V.astype(complex))


def exp_profile(n_r: int, n_t: int, r_list, t_list) -> UiuProfile:
    """UIU profile for exponential ULA correlation coefficients r_k, t_k.

    Users may have different receive coefficients; the shared receive basis is
    the first user's eigenbasis and the remaining profiles are projected onto
    it (exact for equal r_k, circulant-limit approximation otherwise).
    """
    R_list = [exp_correlation(CorrelationSpec(n_r, r)) for r in r_list]
    T_list = [exp_correlation(CorrelationSpec(n_t, t)) for t in t_list]
    return kronecker_to_uiu(R_list, T_list, offbasis_tol=None)


def iid_profile(K: int, n_r: int, n_t: int) -> UiuProfile:
    """Uncorrelated profile: sigma = 1 everywhere, identity eigenbases."""
    return UiuProfile(
        sigma=np.ones((K, n_r, n_t)),
        W=np.stack([np.eye(n_t, dtype=complex)] * K),
        V=np.eye(n_r, dtype=complex),
    )


def _draw_rng(seed: int, user: int, draw: int) -> np.random.Generator:
    # Substream rule: one child stream per (seed, user, draw index), so
    # sampling is reproducible under any parallel schedule across draws.
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(user, draw))
    return np.random.Generator(np.random.PCG64(ss))


def sample_channel(profile: UiuProfile, count: int, seed: int) -> ChannelSamples:
    """Draw ``count`` i.i.d. channel realizations H_k = V Htilde_k W_k^H.

    Htilde_k(i,j) is circular complex Gaussian with variance sigma_k(i,j)/n_t
    (real and imaginary parts i.i.d. N(0, sigma^2/2)).  Deterministic for a
    fixed seed.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    K, n_r, n_t = profile.sigma.shape
    std = np.sqrt(profile.sigma / n_t / 2.0)
    draws = np.empty((count, K, n_r, n_t), dtype=complex)
    for k in range(K):
        Wh = profile.W[k].conj().T
        for d in range(count):
            rng = _draw_rng(seed, k, d)
            ht = rng.standard_normal((n_r, n_t)) * std[k]
            ht = ht + 1j * (rng.standard_normal((n_r, n_t)) * std[k])
            draws[d, k] = profile.V @ ht @ Wh
    return ChannelSamples(draws=draws, seed=seed, count=count)
