import numpy as np
import pytest

from mac_pa import (
    CorrelationSpec,
    exp_correlation,
    exp_profile,
    iid_profile,
    kronecker_to_uiu,
    sample_channel,
)


class TestExpCorrelation:
    def test_zero_correlation_is_identity(self):
        M = exp_correlation(CorrelationSpec(3, 0.0))
        assert np.array_equal(M, np.eye(3))

    def test_half_correlation_two_antennas(self):
        M = exp_correlation(CorrelationSpec(2, 0.5))
        assert np.array_equal(M, np.array([[1.0, 0.5], [0.5, 1.0]]))

    def test_full_correlation_rank_one(self):
        M = exp_correlation(CorrelationSpec(3, 1.0))
        assert np.array_equal(M, np.ones((3, 3)))
        assert np.linalg.matrix_rank(M) == 1

    @pytest.mark.parametrize("r", np.linspace(0.0, 1.0, 21))
    def test_psd(self, r):
        M = exp_correlation(CorrelationSpec(8, float(r)))
        assert np.min(np.linalg.eigvalsh(M)) >= -1e-12

    def test_exact_entries(self):
        M = exp_correlation(CorrelationSpec(5, 0.3))
        for i in range(5):
            for j in range(5):
                assert M[i, j] == pytest.approx(0.3 ** abs(i - j), rel=4e-16)

    @pytest.mark.parametrize("r", [-0.1, 1.5])
    def test_rejects_bad_coefficient(self, r):
        with pytest.raises(ValueError):
            CorrelationSpec(3, r)

    def test_rejects_bad_count(self):
        with pytest.raises(ValueError):
            CorrelationSpec(0, 0.5)


class TestKroneckerToUiu:
    def test_identity_correlations(self):
        prof = kronecker_to_uiu([np.eye(3)] * 2, [np.eye(2)] * 2)
        assert prof.K == 2 and prof.n_r == 3 and prof.n_t == 2
        assert np.allclose(prof.sigma, 1.0)
        prof.validate()

    def test_two_antenna_eigenvalues(self):
        # eigenvalues of [[1, .5], [.5, 1]] are 1.5 and 0.5; T = identity
        R = exp_correlation(CorrelationSpec(2, 0.5))
        prof = kronecker_to_uiu([R], [np.eye(2)])
        assert np.allclose(np.sort(prof.sigma[0][:, 0])[::-1], [1.5, 0.5])
        assert np.allclose(prof.sigma[0][0], prof.sigma[0][0, 0])
        assert np.allclose(prof.sigma[0], np.array([[1.5, 1.5], [0.5, 0.5]]))

    def test_trace_preservation(self):
        R = exp_correlation(CorrelationSpec(4, 0.7))
        T = exp_correlation(CorrelationSpec(3, 0.4))
        prof = kronecker_to_uiu([R], [T])
        assert prof.sigma[0].sum() == pytest.approx(4 * 3, abs=1e-10)

    def test_separability(self):
        R = exp_correlation(CorrelationSpec(4, 0.6))
        T = exp_correlation(CorrelationSpec(4, 0.2))
        prof = kronecker_to_uiu([R], [T])
        dR = prof.sigma[0][:, 0] / prof.sigma[0][0, 0] * prof.sigma[0][0, 0]
        # sigma must factor as an outer product
        u, s, vt = np.linalg.svd(prof.sigma[0])
        assert s[1] < 1e-10 * s[0]

    def test_reconstruction(self):
        R = exp_correlation(CorrelationSpec(5, 0.6))
        T = exp_correlation(CorrelationSpec(4, 0.3))
        prof = kronecker_to_uiu([R, R], [T, T])
        # V diag(dR) V^H must rebuild R when all users share it
        dR = np.real(np.diag(prof.V.conj().T @ R @ prof.V))
        rebuilt_R = prof.V @ np.diag(dR) @ prof.V.conj().T
        assert np.max(np.abs(rebuilt_R - R)) < 1e-8
        dT = np.real(np.diag(prof.W[0].conj().T @ T @ prof.W[0]))
        rebuilt_T = prof.W[0] @ np.diag(dT) @ prof.W[0].conj().T
        assert np.max(np.abs(rebuilt_T - T)) < 1e-8

    def test_rejects_non_psd(self):
        bad = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3 and -1
        with pytest.raises(ValueError, match="positive semidefinite"):
            kronecker_to_uiu([bad], [np.eye(2)])

    def test_rejects_non_commuting_receive_profiles(self):
        R1 = exp_correlation(CorrelationSpec(10, 0.5))
        R2 = exp_correlation(CorrelationSpec(10, 0.2))
        T = np.eye(10)
        with pytest.raises(ValueError, match="off-basis"):
            kronecker_to_uiu([R1, R2], [T, T])

    def test_exp_profile_projects_mixed_coefficients(self):
        prof = exp_profile(10, 10, [0.5, 0.2], [0.5, 0.2])
        prof.validate()
        # projection preserves each user's receive trace
        for k in range(2):
            assert prof.sigma[k].sum() == pytest.approx(100.0, rel=1e-12)


class TestSampleChannel:
    def test_zero_profile_gives_zero_draws(self):
        prof = iid_profile(1, 2, 2)
        prof.sigma[:] = 0.0
        s = sample_channel(prof, 5, seed=3)
        assert np.all(s.draws == 0)

    def test_same_seed_identical(self):
        prof = iid_profile(2, 3, 3)
        a = sample_channel(prof, 7, seed=42)
        b = sample_channel(prof, 7, seed=42)
        assert np.array_equal(a.draws, b.draws)

    def test_different_seed_differs(self):
        prof = iid_profile(1, 2, 2)
        a = sample_channel(prof, 4, seed=1)
        b = sample_channel(prof, 4, seed=2)
        assert not np.array_equal(a.draws, b.draws)

    def test_entry_second_moment(self):
        # E|H(i,j)|^2 = sigma/n_t = 1/4; |H|^2 is exponential so sd = mean
        prof = iid_profile(1, 4, 4)
        s = sample_channel(prof, 10_000, seed=5)
        sq = np.abs(s.draws[:, 0]) ** 2
        mean = sq.mean(axis=0)
        se = sq.std(axis=0, ddof=1) / np.sqrt(s.count)
        assert np.all(np.abs(mean - 0.25) <= 3 * se)

    def test_frobenius_second_moment(self):
        prof = exp_profile(4, 4, [0.6], [0.3])
        s = sample_channel(prof, 4000, seed=9)
        fro = np.sum(np.abs(s.draws[:, 0]) ** 2, axis=(1, 2))
        expected = prof.sigma[0].sum() / prof.n_t
        se = fro.std(ddof=1) / np.sqrt(s.count)
        assert abs(fro.mean() - expected) <= 3 * se

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            sample_channel(iid_profile(1, 2, 2), 0, seed=0)
