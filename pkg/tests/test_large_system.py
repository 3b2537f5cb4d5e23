import numpy as np
import pytest

from mac_pa import (
    CoordinationDistribution,
    DecodingOrder,
    FixedPointError,
    GameContext,
    SolverConfig,
    approx_rate_sic,
    approx_utility_sud,
    denormalize,
    iid_profile,
    rate_sud_exact,
    sample_channel,
    sic_interference_fp,
    sic_signal_fp,
    solve_sud_fps,
    sud_signal_fp,
    uniform_powers,
    utility_sic,
)
from mac_pa.large_system import block_rate, solve_block_fp


def scalar_gamma_oracle(rho, P, m, c):
    """Positive root of a*g^2 + g*(1 + a*(m-1)/c) - 1/c = 0 for sigma = 1,
    n_t = n_r, m users at equal power P and multiplicity c."""
    a = c * rho * P
    if a == 0:
        return 1.0 / c
    b = 1.0 + a * (m - 1) / c
    return (-b + np.sqrt(b * b + 4.0 * a / c)) / (2.0 * a)


class TestBlockFixedPoint:
    def test_zero_power_closed_form(self):
        rng = np.random.default_rng(1)
        sigma = rng.uniform(0.1, 2.0, size=(3, 4, 5))
        fp = solve_block_fp(sigma, 2.0, np.zeros((3, 5)), 3)
        assert fp.iterations == 1
        assert np.array_equal(fp.delta, np.zeros((3, 5)))
        expected = sigma.sum(axis=1) / (3 * 5)
        assert np.allclose(fp.gamma, expected, atol=1e-14)

    @pytest.mark.parametrize("m,c,rho,P", [(1, 1, 0.5, 2.0), (2, 2, 4.0, 1.0), (3, 3, 1.3, 0.7), (2, 3, 10.0, 5.0)])
    def test_uniform_profile_quadratic_oracle(self, m, c, rho, P):
        n = 4
        sigma = np.ones((m, n, n))
        fp = solve_block_fp(sigma, rho, np.full((m, n), P), c)
        expected = scalar_gamma_oracle(rho, P, m, c)
        assert np.allclose(fp.gamma, expected, atol=1e-9)

    def test_self_consistency(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            m = int(rng.integers(1, 4))
            sigma = rng.uniform(0.0, 3.0, size=(m, 5, 4))
            P = rng.uniform(0.0, 4.0, size=(m, 4))
            fp = solve_block_fp(sigma, float(rng.uniform(0.1, 20.0)), P, m)
            assert fp.residual < 1e-10

    def test_nonconvergence_reports_history(self):
        sigma = np.ones((2, 6, 6))
        with pytest.raises(FixedPointError) as err:
            solve_block_fp(sigma, 5.0, np.full((2, 6), 3.0), 2, SolverConfig(max_iter=2))
        assert len(err.value.residuals) == 2

    def test_rejects_negative_power(self):
        with pytest.raises(ValueError):
            solve_block_fp(np.ones((1, 2, 2)), 1.0, np.array([[-1.0, 0.0]]), 1)


class TestSicBlocks:
    def test_last_decoded_interference_empty(self):
        prof = iid_profile(2, 3, 3)
        order = DecodingOrder.from_sequence((1, 0))  # user 0 last
        fp = sic_interference_fp(prof, 1.0, order, 0, np.ones((2, 3)))
        assert fp.empty
        # the rate then reduces to the signal block alone
        sig = sic_signal_fp(prof, 1.0, order, 0, np.ones((2, 3)))
        assert sig.users == (0,) and sig.scale == 1
        r = approx_rate_sic(prof, 1.0, order, 0, np.ones((2, 3)))
        assert r == pytest.approx(block_rate(prof.sigma[[0]], 1.0, np.ones((1, 3)), sig))

    def test_zero_interferer_powers(self):
        prof = iid_profile(2, 3, 3)
        order = DecodingOrder.from_sequence((0, 1))  # user 0 first
        P = np.stack([np.ones(3), np.zeros(3)])
        fp = sic_interference_fp(prof, 2.0, order, 0, P)
        assert np.array_equal(fp.delta, np.zeros((1, 3)))
        assert np.allclose(fp.gamma, 1.0 / 1, atol=1e-12)  # colsum/(N*n_t) = 3/3

    def test_zero_powers_zero_rate(self):
        prof = iid_profile(2, 4, 4)
        order = DecodingOrder.from_sequence((0, 1))
        assert approx_rate_sic(prof, 3.0, order, 0, np.zeros((2, 4))) == 0.0

    def test_sud_equals_first_decoded_sic(self):
        prof = iid_profile(3, 4, 4)
        rng = np.random.default_rng(5)
        P = rng.uniform(0.0, 2.0, size=(3, 4))
        order = DecodingOrder.from_sequence((1, 0, 2))
        first = order.user_at(0)
        sic = approx_rate_sic(prof, 2.5, order, first, P)
        sud = approx_utility_sud(prof, 2.5, first, P)
        assert sic == pytest.approx(sud, abs=1e-12)

    def test_sud_single_user_degenerates(self):
        prof = iid_profile(1, 3, 3)
        P = np.full((1, 3), 1.5)
        sig, intf = solve_sud_fps(prof, 2.0, 0, P)
        assert intf.empty and sig.scale == 1
        order = DecodingOrder((0,))
        assert approx_utility_sud(prof, 2.0, 0, P) == pytest.approx(
            approx_rate_sic(prof, 2.0, order, 0, P), abs=1e-14
        )

    def test_sud_zero_powers_zero_utility(self):
        prof = iid_profile(3, 4, 4)
        assert approx_utility_sud(prof, 2.0, 1, np.zeros((3, 4))) == 0.0


@pytest.fixture(scope="module")
def mc_setup():
    prof = iid_profile(2, 10, 10)
    samples = sample_channel(prof, 2000, seed=99)
    return prof, samples


class TestAccuracy:
    def test_sic_matches_monte_carlo(self, mc_setup):
        prof, samples = mc_setup
        coord = CoordinationDistribution.two_user_sic(0.5)
        ctx = GameContext(profile=prof, rho=2.0, coord=coord)
        powers = uniform_powers(coord, 2, 10, [1.0, 1.0])
        for k in range(2):
            approx = sum(
                coord.probs[s]
                * approx_rate_sic(prof, 2.0, coord.orders[s], k, powers.P[:, s, :])
                for s in range(2)
            )
            mc = utility_sic(ctx, powers, k, samples)
            assert abs(denormalize(approx, 10) - mc.value) / mc.value < 0.02

    def test_sud_matches_monte_carlo(self, mc_setup):
        prof, samples = mc_setup
        coord = CoordinationDistribution.sud()
        ctx = GameContext(profile=prof, rho=2.0, coord=coord)
        powers = uniform_powers(coord, 2, 10, [1.0, 1.0])
        for k in range(2):
            approx = approx_utility_sud(prof, 2.0, k, powers.P[:, 0, :])
            mc = rate_sud_exact(ctx, powers, k, samples)
            assert abs(denormalize(approx, 10) - mc.value) / mc.value < 0.02


class TestAccuracyAcrossDimensions:
    PROFILES = [
        ([0.5, 0.2], [0.5, 0.2], 3.0),
        ([0.3, 0.0], [0.5, 0.2], 4.0),
        ([0.4, 0.2], [0.6, 0.3], 3.0),
    ]

    @pytest.mark.parametrize("n", [8, 10, 16])
    @pytest.mark.parametrize("scenario", range(3))
    def test_within_three_percent(self, n, scenario):
        from mac_pa import exp_profile

        r, t, rho_db = self.PROFILES[scenario]
        rho = 10.0 ** (rho_db / 10.0)
        prof = exp_profile(n, n, r, t)
        samples = sample_channel(prof, 800, seed=1000 + 10 * scenario + n)
        coord = CoordinationDistribution.two_user_sic(0.5)
        ctx = GameContext(profile=prof, rho=rho, coord=coord)
        powers = uniform_powers(coord, 2, n, [1.0, 1.0])
        for k in range(2):
            approx = denormalize(
                sum(
                    coord.probs[s]
                    * approx_rate_sic(prof, rho, coord.orders[s], k, powers.P[:, s, :])
                    for s in range(2)
                ),
                n,
            )
            mc = utility_sic(ctx, powers, k, samples)
            assert abs(approx - mc.value) / mc.value < 0.03

        coord_sud = CoordinationDistribution.sud()
        ctx_sud = GameContext(profile=prof, rho=rho, coord=coord_sud)
        powers_sud = uniform_powers(coord_sud, 2, n, [1.0, 1.0])
        for k in range(2):
            approx = denormalize(approx_utility_sud(prof, rho, k, powers_sud.P[:, 0, :]), n)
            mc = rate_sud_exact(ctx_sud, powers_sud, k, samples)
            assert abs(approx - mc.value) / mc.value < 0.03


class TestShapeProperties:
    def test_monotone_in_own_power(self):
        prof = iid_profile(2, 4, 4)
        order = DecodingOrder.from_sequence((0, 1))
        rng = np.random.default_rng(7)
        P = rng.uniform(0.1, 2.0, size=(2, 4))
        base = approx_rate_sic(prof, 1.5, order, 0, P)
        for j in range(4):
            bumped = P.copy()
            bumped[0, j] += 1e-4
            assert approx_rate_sic(prof, 1.5, order, 0, bumped) - base >= -1e-8

    def test_concave_along_segments(self):
        prof = iid_profile(2, 4, 4)
        order = DecodingOrder.from_sequence((0, 1))
        rng = np.random.default_rng(8)
        for _ in range(10):
            Pa = rng.uniform(0.0, 2.0, size=(2, 4))
            Pb = Pa.copy()
            Pb[0] = rng.uniform(0.0, 2.0, size=4)

            def rate_at(t):
                return approx_rate_sic(prof, 2.0, order, 0, Pa + t * (Pb - Pa))

            r0, r5, r1 = rate_at(0.0), rate_at(0.5), rate_at(1.0)
            assert r0 + r1 - 2 * r5 <= 1e-8
