"""Closed-form free-space interferometer sensitivities.

``mzi_fisher`` and ``ramsey_fisher`` take SI inputs.  The recoil-unit helpers
return information per g^2, matching the lattice simulations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import AugmentedState
from .physcore import DEFAULT_SCALES, HBAR, PhysicalScales, build_basis


def mzi_fisher(p0: float, T_total: float, hbar: float = HBAR) -> float:
    """Three-pulse Mach-Zehnder information (2 p0 T^2 / hbar)^2 with T = T_total / 2."""
    if p0 <= 0 or T_total <= 0:
        raise ValueError("p0 and T_total must be positive")
    T = 0.5 * T_total
    return (2.0 * p0 * T * T / hbar) ** 2


def ramsey_fisher(p0: float, T_total: float, hbar: float = HBAR) -> float:
    """Two-pulse Ramsey information (p0 T_total^2 / hbar)^2."""
    if p0 <= 0 or T_total <= 0:
        raise ValueError("p0 and T_total must be positive")
    return (p0 * T_total * T_total / hbar) ** 2


def mzi_fisher_recoil(p0: float, T_total: float, scales: PhysicalScales = DEFAULT_SCALES) -> float:
    """``mzi_fisher`` for p0 in hbar*k_L and T_total in 1/omega_R, returned per g^2."""
    si = mzi_fisher(scales.momentum_to_si(p0), scales.time_to_si(T_total))
    return si * scales.g**2


def ramsey_fisher_recoil(p0: float, T_total: float, scales: PhysicalScales = DEFAULT_SCALES) -> float:
    si = ramsey_fisher(scales.momentum_to_si(p0), scales.time_to_si(T_total))
    return si * scales.g**2


@dataclass(frozen=True)
class FreeSpaceScenario:
    """Ramsey split of +-p0 (hbar*k_L) evolving for T_total (1/omega_R) at acceleration a (g)."""

    p0: float
    T_total: float
    a: float = 0.0

    def __post_init__(self):
        if self.p0 <= 0 or self.T_total <= 0:
            raise ValueError("p0 and T_total must be positive")


def comb_for_split(p0: float, n_max: int | None = None):
    """Comb holding both +p0 and -p0; p0 must be an integer number of hbar*k_L.

    Without ``n_max`` the smallest such comb is returned.
    """
    if abs(p0 - round(p0)) > 1e-12:
        raise ValueError("free-space oracle needs an integer splitting momentum")
    p0 = int(round(p0))
    if p0 % 2 == 0:
        basis = build_basis(n_max or max(p0 // 2, 1), 0.0)
        n_plus = p0 // 2
        n_minus = -p0 // 2
    else:
        basis = build_basis(n_max or (p0 + 1) // 2, -1.0)
        n_plus = (p0 + 1) // 2
        n_minus = (1 - p0) // 2
    return basis, basis.index_of(n_plus), basis.index_of(n_minus)


def split_state(p0: float, n_max: int | None = None) -> AugmentedState:
    basis, ip, im = comb_for_split(p0, n_max)
    psi = np.zeros(basis.dim, dtype=complex)
    psi[ip] = psi[im] = 1.0 / math.sqrt(2.0)
    return AugmentedState.initial(psi, basis)


def analytic_augmented_state(scenario: FreeSpaceScenario,
                             g_recoil: float = DEFAULT_SCALES.g_recoil,
                             n_max: int | None = None) -> AugmentedState:
    """Exact (psi, d_a psi) at T_total for the free Ramsey split.

    Each momentum component picks up the phase integral of (p - kappa a t)^2;
    d_a psi = -i G psi with G = -kappa T^2 (p - 2 kappa a T / 3).  Only the
    acceleration derivative is carried; d_V psi is left at zero.
    """
    init = split_state(scenario.p0, n_max)
    p = init.basis.momenta
    T, a, k = scenario.T_total, scenario.a, g_recoil
    phase = p * p * T - k * a * T * T * p + k * k * a * a * T**3 / 3.0
    psi = init.psi * np.exp(-1j * phase)
    gen = -k * T * T * (p - 2.0 * k * a * T / 3.0)
    return AugmentedState(psi, -1j * gen * psi, np.zeros_like(psi), T, init.basis)


def generator_variance_info(scenario: FreeSpaceScenario,
                            g_recoil: float = DEFAULT_SCALES.g_recoil) -> float:
    """4 Var(G) of the acceleration generator in the split state."""
    st = analytic_augmented_state(scenario, g_recoil)
    p = st.basis.momenta
    T, a, k = scenario.T_total, scenario.a, g_recoil
    gen = -k * T * T * (p - 2.0 * k * a * T / 3.0)
    w = np.abs(st.psi) ** 2
    mean = np.sum(w * gen)
    return float(4.0 * np.sum(w * (gen - mean) ** 2))
