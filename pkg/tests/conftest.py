import numpy as np
import pytest

from mac_pa import (
    CoordinationDistribution,
    DecodingOrder,
    GameContext,
    iid_profile,
    sample_channel,
    uniform_powers,
)


@pytest.fixture(scope="session")
def two_user_profile():
    """Small uncorrelated 2-user profile for fast Monte-Carlo tests."""
    return iid_profile(2, 3, 3)


@pytest.fixture(scope="session")
def two_user_samples(two_user_profile):
    return sample_channel(two_user_profile, 400, seed=2024)


@pytest.fixture()
def two_user_game(two_user_profile):
    coord = CoordinationDistribution.two_user_sic(0.5)
    ctx = GameContext(profile=two_user_profile, rho=1.5, coord=coord)
    powers = uniform_powers(coord, 2, 3, [1.0, 2.0])
    return ctx, powers


def random_psd(rng, n, definite=False):
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    M = X @ X.conj().T / n
    if definite:
        M = M + 0.1 * np.eye(n)
    return M


def first_order(K=2):
    return DecodingOrder.from_sequence(tuple(range(K)))
