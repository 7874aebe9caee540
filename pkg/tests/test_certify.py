import numpy as np
import pytest

from ucert import certify
from ucert.ensembles import PerturbationParams, haar_state, haar_states, haar_unitary, single_basis_rotation


class TestDiamondDistance:
    def test_identity(self):
        assert certify.diamond_distance_to_identity(np.eye(4)) == 0.0

    def test_single_basis_rotation_is_exact(self):
        rng = np.random.default_rng(0)
        for eps in (0.1, 0.5, 1.0, 1.7):
            psi = haar_state(6, rng)
            U = single_basis_rotation(6, PerturbationParams(eps), psi)
            assert abs(certify.diamond_distance_to_identity(U) - eps) < 1e-10

    def test_saturation_at_antipodal_pair(self):
        assert certify.diamond_distance_to_identity(np.diag([1.0, -1.0])) == 2.0

    def test_invariance_under_phase_and_conjugation(self):
        rng = np.random.default_rng(1)
        U = haar_unitary(5, rng)
        V = haar_unitary(5, rng)
        base = certify.diamond_distance_to_identity(U)
        moved = certify.diamond_distance_to_identity(np.exp(0.37j) * (V @ U @ V.conj().T))
        assert abs(base - moved) < 1e-8


class TestPassProbability:
    def test_identity_passes_always(self):
        assert certify.per_query_pass_probability(np.eye(7)) == pytest.approx(1.0)

    def test_two_level_example(self):
        U = np.diag([1.0, np.exp(1j * np.pi / 3)])
        assert certify.per_query_pass_probability(U) == pytest.approx(5 / 6)

    def test_range_and_saturation(self):
        rng = np.random.default_rng(2)
        for d in (2, 4, 8):
            U = haar_unitary(d, rng)
            p = certify.per_query_pass_probability(U)
            assert 1 / (d + 1) <= p <= 1.0
        assert certify.per_query_pass_probability(np.exp(0.3j) * np.eye(4)) == pytest.approx(1.0)

    def test_matches_haar_monte_carlo(self):
        rng = np.random.default_rng(3)
        d = 8
        U = haar_unitary(d, rng)
        n = 200_000
        psis = haar_states(d, n, rng)
        vals = np.abs(np.einsum("mi,ij,mj->m", psis.conj(), U, psis)) ** 2
        se = vals.std(ddof=1) / np.sqrt(n)
        assert abs(vals.mean() - certify.per_query_pass_probability(U)) < 3 * se

    def test_angles_shortcut(self):
        rng = np.random.default_rng(4)
        theta = rng.uniform(-0.2, 0.2, 6)
        from ucert.linalg import unitary_from_spectrum

        U = unitary_from_spectrum(theta, haar_unitary(6, rng))
        assert certify.pass_probability_from_angles(theta, 6) == pytest.approx(
            certify.per_query_pass_probability(U)
        )


class TestErrorCurve:
    def test_identity_never_errs(self):
        curve = certify.error_curve(np.eye(3), [1, 10, 100], 0.0)
        np.testing.assert_array_equal(curve.points[:, 1], np.ones(3))

    def test_power_value(self):
        U = np.diag([1.0, np.exp(1j * np.pi / 3)])
        curve = certify.error_curve(U, [4], 1.0)
        assert curve.points[0, 1] == pytest.approx(625 / 1296, abs=1e-12)

    def test_stored_points_satisfy_power_law(self):
        rng = np.random.default_rng(5)
        U = haar_unitary(4, rng)
        curve = certify.error_curve(U, np.geomspace(10, 1e6, 25).astype(int), 0.5)
        np.testing.assert_allclose(
            curve.points[:, 1], curve.pass_prob ** curve.points[:, 0], atol=1e-12
        )

    def test_basis_independent(self):
        rng = np.random.default_rng(6)
        U = haar_unitary(4, rng)
        V = haar_unitary(4, rng)
        c1 = certify.error_curve(U, [5, 50], 0.5)
        c2 = certify.error_curve(V @ U @ V.conj().T, [5, 50], 0.5)
        np.testing.assert_allclose(c1.points, c2.points, atol=1e-10)

    def test_curve_validation(self):
        with pytest.raises(ValueError):
            certify.ErrorCurve(d=2, epsilon=0.1, trace_abs=1.0, pass_prob=0.5,
                               points=np.array([[1.0, 0.9]]))


class TestQueriesToTarget:
    def test_known_values(self):
        # p = 1/2: build d=2 with |tr U|^2 = 1, e.g. diag(1, e^{2pi i/3})
        U = np.diag([1.0, np.exp(2j * np.pi / 3)])
        assert certify.per_query_pass_probability(U) == pytest.approx(0.5)
        assert certify.queries_to_target(U, 1 / 3) == 2
        U2 = np.diag([1.0, np.exp(1j * np.pi / 3)])  # p = 5/6
        assert certify.queries_to_target(U2, 1 / 3) == 7

    def test_unreachable_for_identity(self):
        with pytest.raises(certify.UnreachableTargetError):
            certify.queries_to_target(np.eye(3), 1 / 3)

    def test_target_range(self):
        with pytest.raises(ValueError):
            certify.queries_to_target(np.diag([1.0, -1.0]), 1.5)


class TestSimulateIncoherent:
    def test_identity_never_rejects(self):
        rng = np.random.default_rng(7)
        decision = certify.simulate_incoherent(np.eye(3), 40, rng)
        assert decision.verdict == certify.H0_IDENTITY
        assert decision.queries_used == 40

    def test_rejection_rate_matches_curve(self):
        # d=2, U = diag(1,-1): p = (2+0)/6 = 1/3, so N=2 rejects with 1-1/9
        rng = np.random.default_rng(8)
        U = np.diag([1.0, -1.0])
        runs = 4000
        N = 2
        rejected = sum(
            certify.simulate_incoherent(U, N, rng).verdict == certify.H1_FAR for _ in range(runs)
        )
        expected = 1.0 - (1 / 3) ** N
        se = np.sqrt(expected * (1 - expected) / runs)
        assert abs(rejected / runs - expected) < 3 * se

    def test_deterministic_given_seed(self):
        U = np.diag([1.0, np.exp(0.4j)])
        d1 = certify.simulate_incoherent(U, 30, np.random.default_rng(99))
        d2 = certify.simulate_incoherent(U, 30, np.random.default_rng(99))
        assert d1 == d2

    def test_first_rejection_detail(self):
        rng = np.random.default_rng(9)
        decision = certify.simulate_incoherent(np.diag([1.0, -1.0]), 500, rng)
        assert decision.verdict == certify.H1_FAR
        assert decision.detail["first_rejection"] == decision.queries_used


class TestHadamardTest:
    def test_identity_always_accepted(self):
        rng = np.random.default_rng(10)
        psi = haar_state(4, rng)
        decision = certify.hadamard_test_certify(np.eye(4), psi, 50, 0.5, rng)
        assert decision.verdict == certify.H0_IDENTITY

    def test_own_basis_detection_rate(self):
        rng = np.random.default_rng(11)
        eps = 0.5
        N = int(200 / eps**2)
        hits = 0
        runs = 400
        for _ in range(runs):
            psi = haar_state(4, rng)
            U = single_basis_rotation(4, PerturbationParams(eps), psi)
            if certify.hadamard_test_certify(U, psi, N, eps, rng).verdict == certify.H1_FAR:
                hits += 1
        assert hits / runs >= 2 / 3

    def test_orthogonal_state_accepted(self):
        rng = np.random.default_rng(12)
        basis = np.zeros(4, dtype=complex)
        basis[0] = 1.0
        U = single_basis_rotation(4, PerturbationParams(0.8), basis)
        psi = np.zeros(4, dtype=complex)
        psi[1] = 1.0
        decision = certify.hadamard_test_certify(U, psi, 100, 0.8, rng)
        assert decision.verdict == certify.H0_IDENTITY
        assert decision.detail["re_estimate"] == pytest.approx(1.0)
