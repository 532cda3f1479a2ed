"""Self-consistency checks shared by the ``verify`` command and the test suite."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import estimation as est
from .bayes import build_likelihood_grid, centered_axis
from .divergence import curvature_check
from .dynamics import (
    STEPS_PER_SEGMENT,
    AugmentedState,
    ControlProtocol,
    EstimationPoint,
    IntegrationError,
    TruncationError,
    TruncationWarning,
    propagate_augmented,
)
from .freespace import FreeSpaceScenario, ramsey_fisher_recoil, split_state
from .physcore import DEFAULT_SCALES, PhysicalScales, build_basis, ground_state


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.name:<34} value={self.value:.3e}  tol={self.tolerance:.1e}  {self.detail}"


def scaled_matrix_error(A: np.ndarray, B: np.ndarray) -> float:
    """max |A - B|_{mu nu} / sqrt(B_mu mu B_nu nu); off-diagonals judged on the diagonal scale."""
    d = np.sqrt(np.abs(np.diag(B)))
    scale = np.outer(d, d)
    scale[scale == 0] = 1.0
    return float(np.max(np.abs(A - B) / scale))


def prepared_state(V_prep: float, n_max: int = 10, q: float = 0.0) -> AugmentedState:
    basis = build_basis(n_max, q)
    return AugmentedState.initial(ground_state(V_prep, basis), basis)


def run(protocol: ControlProtocol, point: EstimationPoint, steps: int = STEPS_PER_SEGMENT, n_max: int = 10,
        V_prep: float | None = None, scales: PhysicalScales = DEFAULT_SCALES) -> AugmentedState:
    """Propagate the ground state of ``V_prep`` (default: the point's depth) under ``protocol``."""
    init = prepared_state(point.V_L if V_prep is None else V_prep, n_max)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        return propagate_augmented(init, point, protocol, protocol.segment_duration / steps,
                                   g_recoil=scales.g_recoil)


def finite_difference_derivatives(protocol: ControlProtocol, point: EstimationPoint,
                                  delta_a: float = 1e-4, delta_V: float = 1e-3, steps: int = STEPS_PER_SEGMENT,
                                  n_max: int = 10) -> np.ndarray:
    """Central differences of the final state, (2, D); the initial state is held at point.V_L."""
    out = []
    for da, dV, h in ((delta_a, 0.0, delta_a), (0.0, delta_V, delta_V)):
        plus = run(protocol, EstimationPoint(point.a + da, point.V_L + dV), steps, n_max, point.V_L)
        minus = run(protocol, EstimationPoint(point.a - da, point.V_L - dV), steps, n_max, point.V_L)
        out.append((plus.psi - minus.psi) / (2.0 * h))
    return np.array(out)


def check_free_space(steps: int = STEPS_PER_SEGMENT, p0: int = 4, T_us: float = 684.0,
                     scales: PhysicalScales = DEFAULT_SCALES) -> CheckResult:
    T = scales.time_from_si(T_us * 1e-6)
    protocol = ControlProtocol((0.0,) * 32, 32 * math.pi / T)
    init = split_state(p0, n_max=10)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            st = propagate_augmented(init, EstimationPoint(0.0, 0.0), protocol,
                                     protocol.segment_duration / steps, g_recoil=scales.g_recoil)
    except (IntegrationError, TruncationError) as exc:
        return CheckResult("free-space Ramsey oracle", False, math.inf, 1e-8, str(exc))
    ref = ramsey_fisher_recoil(p0, T, scales)
    err = abs(est.qfim(st)[0, 0] / ref - 1.0)
    return CheckResult("free-space Ramsey oracle", err <= 1e-8, err, 1e-8, f"p0={p0} T={T_us}us")


def check_fd_derivatives(protocol: ControlProtocol, point: EstimationPoint, steps: int = STEPS_PER_SEGMENT,
                         n_max: int = 10) -> CheckResult:
    try:
        st = run(protocol, point, steps, n_max)
        fd = finite_difference_derivatives(protocol, point, steps=steps, n_max=n_max)
    except (IntegrationError, TruncationError) as exc:
        return CheckResult("finite-difference derivatives", False, math.inf, 1e-4, str(exc))
    prob, dprob = est.probability_derivatives(st.psi, fd)
    cf_fd = est.cfim_from_probabilities(prob, dprob)
    qf_fd = est.qfim_from_vectors(st.psi, fd)
    err = max(scaled_matrix_error(est.cfim(st), cf_fd), scaled_matrix_error(est.qfim(st), qf_fd))
    return CheckResult("finite-difference derivatives", err <= 1e-4, err, 1e-4, "CFIM and QFIM")


def check_matrix_ordering(protocol: ControlProtocol, point: EstimationPoint, steps: int = STEPS_PER_SEGMENT,
                          n_max: int = 10) -> CheckResult:
    try:
        st = run(protocol, point, steps, n_max)
    except (IntegrationError, TruncationError) as exc:
        return CheckResult("QFIM - CFIM >= 0", False, -math.inf, -1e-8, str(exc))
    m = float(np.linalg.eigvalsh(est.qfim(st) - est.cfim(st)).min())
    return CheckResult("QFIM - CFIM >= 0", m >= -1e-8, m, -1e-8, "min eigenvalue")


def local_curvature_grid(protocol: ControlProtocol, point: EstimationPoint, info: np.ndarray,
                         spread: float = 0.05, steps: int = STEPS_PER_SEGMENT, n_max: int = 10, **grid_kw):
    """5x5 likelihood grid with steps spread/sqrt(I_mu mu) around ``point``."""
    ha = spread / math.sqrt(max(info[0, 0], 1e-300))
    hv = spread / math.sqrt(max(info[1, 1], 1e-300))
    return build_likelihood_grid(protocol, centered_axis(point.a, ha, 2), centered_axis(point.V_L, hv, 2),
                                 n_max=n_max, steps_per_segment=steps, prep_V=point.V_L, **grid_kw)


def check_jsd_curvature(protocol: ControlProtocol, point: EstimationPoint, steps: int = STEPS_PER_SEGMENT,
                        n_max: int = 10, **grid_kw) -> CheckResult:
    try:
        st = run(protocol, point, steps, n_max)
        info = est.cfim(st)
        grid = local_curvature_grid(protocol, point, info, steps=steps, n_max=n_max, **grid_kw)
    except (IntegrationError, TruncationError) as exc:
        return CheckResult("JSD curvature = CFIM", False, math.inf, 0.05, str(exc))
    fit = curvature_check(grid, point)
    err = scaled_matrix_error(fit.info, info)
    return CheckResult("JSD curvature = CFIM", err <= 0.05, err, 0.05, "8 ln2 x fitted form")


def check_dt_convergence(protocol: ControlProtocol, point: EstimationPoint, steps: int = STEPS_PER_SEGMENT,
                         n_max: int = 10) -> CheckResult:
    try:
        f1 = est.qfim(run(protocol, point, steps, n_max))
        f2 = est.qfim(run(protocol, point, 2 * steps, n_max))
    except (IntegrationError, TruncationError) as exc:
        return CheckResult("dt-halving convergence", False, math.inf, 1e-6, str(exc))
    err = scaled_matrix_error(f1, f2)
    return CheckResult("dt-halving convergence", err <= 1e-6, err, 1e-6, f"{steps} vs {2 * steps} steps")


def dt_halving_ratio(protocol: ControlProtocol, point: EstimationPoint, steps: int = STEPS_PER_SEGMENT,
                     n_max: int = 10, quantity: str = "state") -> float:
    """|X(h) - X(h/2)| / |X(h/2) - X(h/4)|; about 16 for a fourth-order scheme.

    ``quantity='state'`` uses the augmented state (psi and both derivative
    vectors), which is what the integrator advances.  ``'qfim'`` uses the
    QFIM, where gauge invariance cancels part of the leading phase error, so
    its ratio can sit between 16 and 32 at practical step sizes.
    """
    if quantity not in ("state", "qfim"):
        raise ValueError("quantity must be 'state' or 'qfim'")
    states = [run(protocol, point, s, n_max) for s in (steps, 2 * steps, 4 * steps)]
    if quantity == "state":
        f = [np.concatenate([s.psi, s.dpsi_da, s.dpsi_dV]) for s in states]
    else:
        f = [est.qfim(s) for s in states]
    return float(np.linalg.norm(f[0] - f[1]) / np.linalg.norm(f[1] - f[2]))


def fast_suite(protocol: ControlProtocol, point: EstimationPoint = EstimationPoint(0.0, 10.0),
               steps: int = STEPS_PER_SEGMENT, n_max: int = 10, **grid_kw) -> list[CheckResult]:
    return [
        check_free_space(steps),
        check_fd_derivatives(protocol, point, steps, n_max),
        check_matrix_ordering(protocol, point, steps, n_max),
        check_jsd_curvature(protocol, point, steps, n_max, **grid_kw),
        check_dt_convergence(protocol, point, steps, n_max),
    ]
