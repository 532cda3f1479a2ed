"""Fisher information from augmented states, nuisance marginalization and rewards.

Parameters are ordered (a, V_L) with a in g and V_L in E_R, so matrix
element (mu, nu) carries units 1/(unit_mu * unit_nu).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import AugmentedState

PROB_FLOOR = 1e-12
R_MAX = 1e3
SINH_CAP = 30.0
PARAMS = ("a", "V_L")


class NuisanceDeficitError(ValueError):
    """The nuisance block carries no information but is coupled to the target."""


class OmittedParameterWarning(UserWarning):
    """A parameter with zero Fisher information was dropped before inversion."""


class UndefinedCorrelationError(ValueError):
    pass


def _derivs(state: AugmentedState) -> np.ndarray:
    return np.stack([state.dpsi_da, state.dpsi_dV])


def probability_derivatives(psi: np.ndarray, dpsi: np.ndarray):
    """P_n and dP_n/db^mu for amplitudes ``psi`` (..., D) and derivatives (..., K, D)."""
    prob = np.abs(psi) ** 2
    dprob = 2.0 * np.real(np.conj(psi)[..., None, :] * dpsi)
    return prob, dprob


def cfim_from_probabilities(prob: np.ndarray, dprob: np.ndarray, floor: float = PROB_FLOOR) -> np.ndarray:
    """sum_n dP_mu dP_nu / P_n over outcomes with P_n >= floor; broadcasts over leading axes."""
    keep = prob >= floor
    inv = np.where(keep, 1.0 / np.where(keep, prob, 1.0), 0.0)
    return np.einsum("...in,...jn,...n->...ij", dprob, dprob, inv)


def score_functions(state: AugmentedState, floor: float = PROB_FLOOR):
    """Per-outcome scores l_mu(n) = d log P_n / d b^mu.

    Returns (outcome positions, probabilities, scores) where scores has one
    row per retained outcome and one column per parameter.
    """
    prob, dprob = probability_derivatives(state.psi, _derivs(state))
    keep = np.flatnonzero(prob >= floor)
    return keep, prob[keep], (dprob[:, keep] / prob[keep]).T


def cfim(state: AugmentedState, floor: float = PROB_FLOOR) -> np.ndarray:
    _, p, scores = score_functions(state, floor)
    return np.einsum("n,ni,nj->ij", p, scores, scores)


def qfim_from_vectors(psi: np.ndarray, dpsi: np.ndarray) -> np.ndarray:
    """4 Re[<d_mu psi|d_nu psi> - <d_mu psi|psi><psi|d_nu psi>] for a pure state."""
    overlap = dpsi.conj() @ dpsi.T
    proj = dpsi.conj() @ psi
    return 4.0 * np.real(overlap - np.outer(proj, proj.conj()))


def qfim(state: AugmentedState) -> np.ndarray:
    return qfim_from_vectors(state.psi, _derivs(state))


@dataclass(frozen=True)
class FisherMatrices:
    cfim: np.ndarray
    qfim: np.ndarray
    basis_label: str = "momentum"


def fisher_matrices(state: AugmentedState, floor: float = PROB_FLOOR) -> FisherMatrices:
    return FisherMatrices(cfim(state, floor), qfim(state))


def block_marginal(info: np.ndarray, target_indices=(0,), warn: bool = True) -> np.ndarray:
    """Information on the targets after marginalizing the nuisances: A - C N^-1 C^T.

    Nuisance parameters with zero diagonal information are dropped first; if
    they still couple to a target that is an error.
    """
    info = np.asarray(info, dtype=float)
    target = list(target_indices)
    nuis = [i for i in range(info.shape[0]) if i not in target]
    A = info[np.ix_(target, target)]
    zero = [i for i in nuis if info[i, i] == 0.0]
    if zero:
        if np.any(info[np.ix_(target, zero)] != 0.0):
            raise NuisanceDeficitError("nuisance information deficit: zero-information nuisance "
                                       "couples to the target")
        if warn:
            names = ", ".join(PARAMS[i] if i < len(PARAMS) else str(i) for i in zero)
            warnings.warn(f"omitting zero-information nuisance parameter(s) {names}",
                          OmittedParameterWarning, stacklevel=2)
        nuis = [i for i in nuis if i not in zero]
    if not nuis:
        return A
    C = info[np.ix_(target, nuis)]
    N = info[np.ix_(nuis, nuis)]
    if np.linalg.cond(N) > 1e12:
        raise NuisanceDeficitError(f"nuisance block is singular (cond = {np.linalg.cond(N):.3g})")
    return A - C @ np.linalg.solve(N, C.T)


def marginal_information(info: np.ndarray, target: int = 0, warn: bool = True) -> float:
    """Scalar 1/(I^-1)_{tt} for one target against all other parameters."""
    return float(block_marginal(info, (target,), warn=warn)[0, 0])


def correlation(info: np.ndarray, mu: int = 0, nu: int = 1) -> float:
    imu, inu = info[mu, mu], info[nu, nu]
    if imu <= 0 or inu <= 0:
        raise UndefinedCorrelationError("correlation undefined for a parameter with zero information")
    return float(info[mu, nu] / math.sqrt(imu * inu))


def variance_penalty_bound(info: np.ndarray, N: int, target: int = 0, nuisance: int = 1) -> float:
    """[N I_t (1 - Corr^2)]^-1; infinite when the scores are perfectly correlated."""
    if N < 1:
        raise ValueError("N must be >= 1")
    c = correlation(info, target, nuisance)
    denom = N * info[target, target] * (1.0 - c * c)
    if denom <= 0.0:
        return math.inf
    return 1.0 / denom


@dataclass(frozen=True)
class SensitivityReport:
    marginal_info_a: float
    zeta_a: float
    corr_aV: float
    I_a: float
    I_V: float
    I_aV: float

    def as_dict(self) -> dict:
        return {k: float(v) for k, v in self.__dict__.items()}


def sensitivity_report(info: np.ndarray, I_mzi_ref: float) -> SensitivityReport:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OmittedParameterWarning)
        marg = marginal_information(info, 0)
    try:
        corr = correlation(info, 0, 1)
    except UndefinedCorrelationError:
        corr = math.nan
    return SensitivityReport(marg, marg / I_mzi_ref, corr, info[0, 0], info[1, 1], info[0, 1])


def _ratio_reward(f: float, r_max: float) -> float:
    if f >= 1.0:
        return r_max
    return min(f / (1.0 - f), r_max)


def reward_accel(info: np.ndarray, I_mzi_ref: float, r_max: float = R_MAX) -> float:
    """f/(1-f) with f = zeta_a / 2, clamped to ``r_max`` as f reaches 1."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OmittedParameterWarning)
        zeta = marginal_information(info, 0) / I_mzi_ref
    return _ratio_reward(0.5 * zeta, r_max)


def reward_accel_spp(info: np.ndarray, I_mzi_ref: float, r_max: float = R_MAX) -> float:
    """Same shaping as ``reward_accel`` but assuming the lattice depth is known (I^-1_aa -> 1/I_a)."""
    return _ratio_reward(0.5 * info[0, 0] / I_mzi_ref, r_max)


def reward_lattice(info: np.ndarray, cap: float = SINH_CAP) -> float:
    """sinh(4 * marginal I_V) with I_V in 1/E_R^2; the argument is capped against overflow."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OmittedParameterWarning)
        marg = marginal_information(info, 1)
    return math.sinh(min(4.0 * marg, cap))


def single_param_reward(info: np.ndarray, target: int = 0) -> float:
    return float(info[target, target])
