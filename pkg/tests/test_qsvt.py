import math

import numpy as np
import pytest

from ucert import qsvt
from ucert.certify import H0_IDENTITY, H1_FAR
from ucert.ensembles import PerturbationParams, haar_state, haar_states, haar_unitary, single_basis_rotation


@pytest.fixture(scope="module")
def solved_plan():
    """One solved mid-size plan shared across tests (solving is expensive)."""
    plan = qsvt.qsvt_params(2, 1.0)
    qsvt.solve_qsp_phases(plan)
    return plan


class TestPlanParameters:
    def test_reference_plan(self):
        plan = qsvt.qsvt_params(4, 0.5)
        assert plan.delta == pytest.approx(0.25 / 192)
        assert plan.cap_delta == pytest.approx(1 / math.sqrt(6))
        assert plan.degree == 90

    def test_degree_formula_equivalence(self):
        for d, eps in ((2, 0.3), (8, 1.1), (64, 0.9)):
            plan = qsvt.qsvt_params(d, eps)
            alt = 2 * math.ceil(math.sqrt(48 * d) * math.log(2 * math.sqrt(6)) / eps)
            assert plan.degree == alt

    def test_degree_doubles_with_dimension(self):
        for d, eps in ((4, 0.5), (16, 0.25)):
            n1 = qsvt.qsvt_params(d, eps).degree
            n2 = qsvt.qsvt_params(4 * d, eps).degree
            assert n1 >= 40
            assert 1.9 <= n2 / n1 <= 2.1

    def test_delta_in_range(self):
        for d, eps in ((2, 1.99), (1024, 0.01)):
            plan = qsvt.qsvt_params(d, eps)
            assert 0.0 < plan.delta < 0.5

    def test_epsilon_validation(self):
        with pytest.raises(ValueError):
            qsvt.qsvt_params(4, 0.0)
        with pytest.raises(ValueError):
            qsvt.qsvt_params(4, 2.0)


class TestResponsePolynomial:
    def test_endpoint_is_one(self):
        for delta in (0.0, 1e-3, 0.2):
            assert qsvt.rescaled_chebyshev(1.0, delta, 30) == pytest.approx(1.0, abs=1e-12)

    def test_suppression_on_window(self):
        plan = qsvt.qsvt_params(4, 0.5)
        xs = np.linspace(0.0, 1.0 - plan.delta, 1000)
        vals = qsvt.rescaled_chebyshev(xs, plan.delta, plan.degree)
        assert np.abs(vals).max() <= plan.cap_delta + 1e-10

    def test_bounded_on_interval(self):
        plan = qsvt.qsvt_params(8, 1.0)
        xs = np.linspace(-1, 1, 2001)
        assert np.abs(qsvt.rescaled_chebyshev(xs, plan.delta, plan.degree)).max() <= 1 + 1e-10

    def test_even(self):
        rng = np.random.default_rng(0)
        xs = rng.uniform(0, 1, 40)
        a = qsvt.rescaled_chebyshev(xs, 0.01, 16)
        b = qsvt.rescaled_chebyshev(-xs, 0.01, 16)
        np.testing.assert_allclose(a, b, atol=1e-13)

    def test_plain_chebyshev_at_zero_delta(self):
        xs = np.linspace(-1, 1, 101)
        np.testing.assert_allclose(
            qsvt.rescaled_chebyshev(xs, 0.0, 8), np.cos(8 * np.arccos(xs)), atol=1e-12
        )

    def test_stable_at_high_degree(self):
        # coefficient expansion would overflow near degree 120; closed forms hold
        val = qsvt.rescaled_chebyshev(1.0 - 1e-9, 1e-4, 120)
        assert np.isfinite(val) and abs(val) <= 1.0

    def test_odd_degree_rejected(self):
        with pytest.raises(ValueError):
            qsvt.rescaled_chebyshev(0.5, 0.01, 7)


class TestQspResponse:
    def test_zero_phases_give_chebyshev(self):
        rng = np.random.default_rng(1)
        xs = rng.uniform(-1, 1, 64)
        for n in (2, 7, 40):
            got = qsvt.qsp_response(np.zeros(n + 1), xs)
            np.testing.assert_allclose(got.real, np.cos(n * np.arccos(xs)), atol=1e-10)

    def test_against_direct_matrix_product(self):
        rng = np.random.default_rng(2)
        w = rng.uniform(-np.pi, np.pi, 6)
        x = 0.631
        sx = math.sqrt(1 - x * x)
        W = np.array([[x, 1j * sx], [1j * sx, x]])
        M = np.diag([np.exp(1j * w[0]), np.exp(-1j * w[0])])
        for k in range(1, 6):
            M = M @ W @ np.diag([np.exp(1j * w[k]), np.exp(-1j * w[k])])
        assert abs(qsvt.qsp_response(w, x) - M[0, 0]) < 1e-12

    def test_modulus_bounded(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            w = rng.uniform(-np.pi, np.pi, rng.integers(1, 12))
            x = rng.uniform(-1, 1)
            assert abs(qsvt.qsp_response(w, x)) <= 1 + 1e-12

    def test_unit_signal_has_unit_modulus(self):
        rng = np.random.default_rng(4)
        w = rng.uniform(-np.pi, np.pi, 9)
        assert abs(abs(qsvt.qsp_response(w, 1.0)) - 1.0) < 1e-12

    def test_empty_phase_list(self):
        assert qsvt.qsp_response([], 0.3) == 1.0

    def test_signal_domain(self):
        with pytest.raises(ValueError):
            qsvt.qsp_response(np.zeros(3), 1.5)


class TestPhaseSolver:
    def test_plain_chebyshev_reference_case(self):
        plan = qsvt.QsvtPlan(
            d=2, epsilon=1.0, delta=1e-6, cap_delta=0.4, degree=2, match_floor=0.5
        )
        plan.delta = 0.0  # reference case: target is T_2 itself
        w = qsvt.solve_qsp_phases(plan)
        xs = np.linspace(-1, 1, 200)
        got = qsvt.qsp_response(w, xs)
        np.testing.assert_allclose(np.abs(got), np.abs(2 * xs**2 - 1), atol=1e-10)
        assert plan.solver_residual == 0.0

    def test_solved_plan_residual(self, solved_plan):
        assert solved_plan.solver_residual <= qsvt.PHASE_RESIDUAL_TOL
        assert solved_plan.phases.size == solved_plan.degree + 1

    def test_residual_matches_reported(self, solved_plan):
        grid = qsvt._chebyshev_nodes(solved_plan.match_floor, 1.0, 1000)
        again = qsvt.phase_residual(solved_plan.phases, solved_plan, grid)
        assert again == pytest.approx(solved_plan.solver_residual, rel=1e-6)

    def test_degree_cap(self):
        plan = qsvt.qsvt_params(1024, 0.05)
        assert plan.degree > qsvt.PHASE_SOLVER_MAX_DEGREE
        with pytest.raises(ValueError):
            qsvt.solve_qsp_phases(plan)


class TestCircuit:
    def test_identity_channel_keeps_overlap(self, solved_plan):
        rng = np.random.default_rng(5)
        psi = haar_state(2, rng)
        out = qsvt.apply_qsvt_circuit(np.eye(2), psi, solved_plan.phases, psi)
        assert abs(abs(psi.conj() @ out) - 1.0) < 1e-8

    def test_matches_two_dimensional_response(self, solved_plan):
        rng = np.random.default_rng(6)
        worst = 0.0
        for _ in range(10):
            U = haar_unitary(2, rng)
            psi = haar_state(2, rng)
            out = qsvt.apply_qsvt_circuit(U, psi, solved_plan.phases, psi)
            x = min(abs(psi.conj() @ (U.conj().T @ psi)), 1.0)
            worst = max(worst, abs(abs(psi.conj() @ out) - abs(qsvt.qsp_response(solved_plan.phases, x))))
        assert worst < 1e-6

    def test_matches_target_on_perturbed_channels(self, solved_plan):
        rng = np.random.default_rng(7)
        eps = PerturbationParams(solved_plan.epsilon)
        worst = 0.0
        for _ in range(10):
            U = single_basis_rotation(2, eps, haar_state(2, rng))
            psi = haar_state(2, rng)
            out = qsvt.apply_qsvt_circuit(U, psi, solved_plan.phases, psi)
            x = min(abs(psi.conj() @ (U.conj().T @ psi)), 1.0)
            target = abs(qsvt.rescaled_chebyshev(x, solved_plan.delta, solved_plan.degree))
            worst = max(worst, abs(abs(psi.conj() @ out) - target))
        assert worst < 1e-6

    def test_complement_subspace_untouched(self, solved_plan):
        rng = np.random.default_rng(8)
        U = haar_unitary(6, rng)
        psi = haar_state(6, rng)
        # build a vector orthogonal to span{psi, U psi}
        basis = np.linalg.qr(np.column_stack([psi, U @ psi, haar_state(6, rng)]))[0]
        perp = basis[:, 2]
        out = qsvt.apply_qsvt_circuit(U, psi, solved_plan.phases, perp)
        assert abs(psi.conj() @ out) < 1e-10
        assert abs((U @ psi).conj() @ out) < 1e-10

    def test_phase_count_validation(self):
        with pytest.raises(ValueError):
            qsvt.apply_qsvt_circuit(np.eye(2), np.array([1.0, 0.0]), np.zeros(4), np.array([1.0, 0.0]))


class TestSimulation:
    def test_identity_always_accepted(self, solved_plan):
        rng = np.random.default_rng(9)
        for _ in range(20):
            dec = qsvt.simulate_coherent(np.eye(2), solved_plan, rng)
            assert dec.verdict == H0_IDENTITY
            assert dec.queries_used == solved_plan.degree

    def test_fast_and_explicit_paths_agree(self, solved_plan):
        rng = np.random.default_rng(10)
        U = haar_unitary(2, rng)
        fast = qsvt.simulate_coherent(U, solved_plan, np.random.default_rng(3), path="fast")
        slow = qsvt.simulate_coherent(U, solved_plan, np.random.default_rng(3), path="explicit")
        assert abs(fast.detail["pr_pass"] - slow.detail["pr_pass"]) < 1e-6
        assert fast.verdict == slow.verdict

    def test_deterministic(self, solved_plan):
        U = haar_unitary(2, np.random.default_rng(11))
        a = qsvt.simulate_coherent(U, solved_plan, np.random.default_rng(5))
        b = qsvt.simulate_coherent(U, solved_plan, np.random.default_rng(5))
        assert a == b

    def test_far_channels_rejected_often(self, solved_plan):
        rng = np.random.default_rng(12)
        eps = PerturbationParams(solved_plan.epsilon)
        U = single_basis_rotation(2, eps, haar_state(2, rng))
        rejections = sum(
            qsvt.simulate_coherent(U, solved_plan, rng).verdict == H1_FAR for _ in range(300)
        )
        assert rejections / 300 > 2 / 3

    def test_explicit_requires_phases(self):
        plan = qsvt.qsvt_params(4, 0.5)
        with pytest.raises(ValueError):
            qsvt.simulate_coherent(np.eye(4), plan, np.random.default_rng(0), path="explicit")


class TestErrorProbability:
    def test_identity_mean_is_one(self):
        plan = qsvt.qsvt_params(4, 0.5)
        est = qsvt.coherent_error_probability(np.eye(4), plan, 50, np.random.default_rng(13))
        assert est.mean == pytest.approx(1.0)
        assert est.stderr == pytest.approx(0.0, abs=1e-12)

    def test_single_basis_rotation_error_below_third(self):
        plan = qsvt.qsvt_params(4, 0.5)
        rng = np.random.default_rng(14)
        U = single_basis_rotation(4, PerturbationParams(0.5), haar_state(4, rng))
        est = qsvt.coherent_error_probability(U, plan, 2000, rng)
        assert est.mean <= 1 / 3 + 3 * est.stderr

    def test_overlap_tail_monte_carlo(self):
        # Pr[|<psi|U^dag|psi>| > 1 - delta] <= 8 d delta / eps^2
        from ucert.bounds import overlap_tail_bound

        rng = np.random.default_rng(15)
        for d, delta in ((4, 1e-3), (8, 1e-3), (4, 1e-4)):
            U = single_basis_rotation(d, PerturbationParams(0.5), haar_state(d, rng))
            n = 100_000
            psis = haar_states(d, n, rng)
            xs = np.abs(np.einsum("mi,ij,mj->m", psis.conj(), U.conj().T, psis))
            freq = float(np.mean(xs > 1 - delta))
            se = math.sqrt(max(freq * (1 - freq), 1e-12) / n)
            assert freq <= overlap_tail_bound(d, 0.5, delta) + 3 * se


class TestPhasesCsv:
    def test_write_and_parse(self, tmp_path, solved_plan):
        path = tmp_path / "phases.csv"
        qsvt.write_phases_csv(path, solved_plan.phases)
        rows = path.read_text().splitlines()
        assert rows[0] == "index,phase_radians"
        assert len(rows) == 1 + solved_plan.phases.size
        parsed = np.array([float(r.split(",")[1]) for r in rows[1:]])
        np.testing.assert_array_equal(parsed, solved_plan.phases)
