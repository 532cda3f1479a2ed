import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from latticedsp import estimation as est
from latticedsp.checks import finite_difference_derivatives, run
from latticedsp.dynamics import AugmentedState, ControlProtocol, EstimationPoint
from latticedsp.physcore import build_basis

from oracles import binomial_fringe_info

I41 = np.array([[4.0, 1.0], [1.0, 1.0]])


def fringe_state(theta):
    """Two-outcome state (sin theta, cos theta) with d/dtheta stored as the a-derivative."""
    b = build_basis(1)
    psi = np.array([math.sin(theta), math.cos(theta), 0.0], dtype=complex)
    d = np.array([math.cos(theta), -math.sin(theta), 0.0], dtype=complex)
    return AugmentedState(psi, d, np.zeros(3, complex), 0.0, b)


@pytest.fixture(scope="module")
def propagated():
    rng = np.random.default_rng(7)
    prot = ControlProtocol(tuple(rng.integers(0, 8, 8) * math.pi / 12))
    point = EstimationPoint(0.0, 10.0)
    return prot, point, run(prot, point)


class TestScores:
    def test_zero_derivatives(self):
        st_ = AugmentedState.initial(np.array([0.6, 0.8, 0.0]), build_basis(1))
        _, _, s = est.score_functions(st_)
        assert np.all(s == 0)
        assert np.all(est.cfim(st_) == 0) and np.all(est.qfim(st_) == 0)

    def test_zero_mean(self, propagated):
        _, p, s = est.score_functions(propagated[2])
        assert np.all(np.abs(p @ s) < 1e-8)

    def test_scores_match_fd_log_likelihood(self, propagated):
        prot, point, st_ = propagated
        keep, p, s = est.score_functions(st_)
        fd = finite_difference_derivatives(prot, point)
        _, dprob = est.probability_derivatives(st_.psi, fd)
        sig = p > 1e-6
        np.testing.assert_allclose(s[sig], (dprob[:, keep] / p).T[sig], rtol=1e-4, atol=1e-4 * np.abs(s).max())

    def test_floor_excludes(self):
        st_ = fringe_state(1e-8)
        keep, _, _ = est.score_functions(st_)
        assert keep.tolist() == [1]


class TestFisher:
    @pytest.mark.parametrize("theta", [0.3, 0.7, 1.2])
    def test_binomial_fringe(self, theta):
        I = est.cfim(fringe_state(theta))
        assert I[0, 0] == pytest.approx(4.0, rel=1e-12)
        assert binomial_fringe_info(theta) == pytest.approx(4.0, rel=1e-6)
        assert est.qfim(fringe_state(theta))[0, 0] == pytest.approx(4.0, rel=1e-12)

    def test_ordering_and_symmetry(self, propagated):
        fm = est.fisher_matrices(propagated[2])
        for M in (fm.cfim, fm.qfim):
            np.testing.assert_allclose(M, M.T, atol=1e-10 * np.abs(M).max())
            assert np.all(np.diag(M) >= 0)
        assert np.linalg.eigvalsh(fm.cfim).min() >= -1e-8
        assert np.linalg.eigvalsh(fm.qfim - fm.cfim).min() >= -1e-8
        assert fm.basis_label == "momentum"

    def test_qfim_gauge_invariance(self, propagated):
        st_ = propagated[2]
        n = math.sqrt(st_.norm)
        psi0, d0 = st_.psi / n, np.stack([st_.dpsi_da, st_.dpsi_dV]) / n
        ref = est.qfim_from_vectors(psi0, d0)
        # constant phase
        c = np.exp(0.9j)
        assert np.max(np.abs(est.qfim_from_vectors(c * psi0, c * d0) - ref)) <= 1e-10 * np.abs(ref).max()
        # parameter-dependent phase chi(b) with gradient g
        g = np.array([0.4, -1.3])
        d = c * (d0 + 1j * g[:, None] * psi0)
        assert np.max(np.abs(est.qfim_from_vectors(c * psi0, d) - ref)) <= 1e-10 * np.abs(ref).max()

    def test_cfim_matches_fd_probabilities(self, propagated):
        prot, point, st_ = propagated
        fd = finite_difference_derivatives(prot, point)
        prob, dprob = est.probability_derivatives(st_.psi, fd)
        ref = est.cfim_from_probabilities(prob, dprob)
        d = np.sqrt(np.diag(ref))
        assert np.max(np.abs(est.cfim(st_) - ref) / np.outer(d, d)) < 1e-4

    def test_parameter_independent(self):
        st_ = AugmentedState.initial(np.array([0.6, 0.8j, 0.0]), build_basis(1))
        np.testing.assert_array_equal(est.cfim(st_), np.zeros((2, 2)))


class TestMarginal:
    def test_arithmetic_example(self):
        assert est.marginal_information(I41) == pytest.approx(3.0, rel=1e-14)

    def test_uncoupled(self):
        I = np.diag([5.0, 2.0])
        assert est.marginal_information(I) == 5.0

    @given(st.floats(0.1, 100), st.floats(0.1, 100), st.floats(-0.99, 0.99))
    def test_inverse_identity(self, ia, iv, c):
        I = np.array([[ia, c * math.sqrt(ia * iv)], [c * math.sqrt(ia * iv), iv]])
        m = est.marginal_information(I)
        assert m == pytest.approx(1.0 / np.linalg.inv(I)[0, 0], rel=1e-10)
        assert m <= ia * (1 + 1e-12)

    def test_zero_nuisance_omitted_with_warning(self):
        with pytest.warns(est.OmittedParameterWarning):
            assert est.marginal_information(np.diag([3.0, 0.0])) == 3.0

    def test_deficit_error(self):
        with pytest.raises(est.NuisanceDeficitError, match="nuisance information deficit"):
            est.block_marginal(np.array([[1.0, 0.5], [0.5, 0.0]]))
        singular = np.array([[2.0, 0.5, 0.5], [0.5, 1.0, 1.0], [0.5, 1.0, 1.0]])
        with pytest.raises(est.NuisanceDeficitError, match="singular"):
            est.block_marginal(singular, (0,))

    def test_block_three_parameters(self):
        rng = np.random.default_rng(1)
        A = rng.normal(size=(3, 3))
        I = A @ A.T + np.eye(3)
        M = est.block_marginal(I, (0, 1))
        np.testing.assert_allclose(M, np.linalg.inv(np.linalg.inv(I)[:2, :2]), rtol=1e-12)


class TestCorrelation:
    def test_examples(self):
        assert est.correlation(I41) == pytest.approx(0.5)
        assert est.correlation(I41, 0, 0) == pytest.approx(1.0)
        assert est.correlation(np.diag([2.0, 3.0])) == 0.0
        with pytest.raises(est.UndefinedCorrelationError):
            est.correlation(np.diag([2.0, 0.0]))

    @given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
    def test_rescaling_invariance(self, ca, cv):
        S = np.diag([ca, cv])
        assert est.correlation(S @ I41 @ S) == pytest.approx(est.correlation(I41), abs=1e-12)

    def test_bound_on_propagated(self, propagated):
        assert abs(est.correlation(est.cfim(propagated[2]))) <= 1.0


class TestPenalty:
    def test_examples(self):
        assert est.variance_penalty_bound(np.diag([4.0, 1.0]), 1) == pytest.approx(0.25)
        base = 1.0 / 4.0
        assert est.variance_penalty_bound(I41, 1) == pytest.approx(base * 4.0 / 3.0)
        assert est.variance_penalty_bound(I41, 10) == pytest.approx(1.0 / (10 * est.marginal_information(I41)))

    def test_perfect_correlation_infinite(self):
        assert est.variance_penalty_bound(np.array([[1.0, 1.0], [1.0, 1.0]]), 5) == math.inf

    def test_invalid_N(self):
        with pytest.raises(ValueError):
            est.variance_penalty_bound(I41, 0)


class TestRewards:
    def test_accel_examples(self):
        ref = 2.0
        assert est.reward_accel(np.diag([0.0, 1.0]), ref) == 0.0
        assert est.reward_accel(np.diag([2.0, 1.0]), ref) == pytest.approx(1.0)
        assert est.reward_accel(np.diag([4.0, 1.0]), ref) == est.R_MAX
        assert est.reward_accel(np.diag([5.0, 1.0]), ref, r_max=50.0) == 50.0

    def test_accel_uses_marginal(self):
        # I41 has marginal 3, zeta = 3/4 with ref 4
        f = 3.0 / 8.0
        assert est.reward_accel(I41, 4.0) == pytest.approx(f / (1 - f))
        f = 4.0 / 8.0
        assert est.reward_accel_spp(I41, 4.0) == pytest.approx(f / (1 - f))

    def test_lattice(self):
        assert est.reward_lattice(np.zeros((2, 2)) + np.diag([1.0, 0.0]) * 0 + np.diag([1.0, 0.0])) == 0.0
        assert est.reward_lattice(np.diag([1.0, 7.31])) == pytest.approx(math.sinh(29.24))
        assert math.isfinite(est.reward_lattice(np.diag([1.0, 1e6])))
        assert est.reward_lattice(np.diag([1.0, 1e6])) == pytest.approx(math.sinh(30.0))
        vals = [est.reward_lattice(np.diag([1.0, v])) for v in (0.5, 1.0, 2.0, 4.0)]
        assert vals == sorted(vals)

    def test_single_param(self):
        assert est.single_param_reward(np.zeros((2, 2))) == 0.0
        assert est.single_param_reward(I41) == 4.0
        assert est.single_param_reward(np.array([[4.0, 3.0], [3.0, 9.0]])) == 4.0

    def test_report(self):
        rep = est.sensitivity_report(I41, 1.5)
        assert rep.marginal_info_a == pytest.approx(3.0)
        assert rep.zeta_a == pytest.approx(2.0)
        assert rep.corr_aV == pytest.approx(0.5)
        assert rep.marginal_info_a <= rep.I_a
        assert set(rep.as_dict()) == {"marginal_info_a", "zeta_a", "corr_aV", "I_a", "I_V", "I_aV"}
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert math.isnan(est.sensitivity_report(np.diag([1.0, 0.0]), 1.0).corr_aV)
