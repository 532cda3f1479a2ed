"""Shaking waveforms, augmented-state propagation and state diagnostics.

Propagation happens in the Galilean-boosted frame, where the acceleration
enters only through the kinematic momentum p - kappa*a*t (kappa = g in recoil
accelerations).  The state is carried together with its derivatives with
respect to the acceleration a (in g) and the lattice depth V_L (in E_R).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .physcore import (
    DEFAULT_SCALES,
    MomentumBasis,
    bloch_diagonalize,
    lattice_matrix,
)

OMEGA_S = 11.5
STEPS_PER_SEGMENT = 1024
NORM_TOLERANCE = 1e-6
EDGE_WARN = 1e-6
EDGE_ABORT = 1e-3


class IntegrationError(RuntimeError):
    """Raised when the RK4 integration loses norm; retry with a smaller dt."""


class TruncationError(RuntimeError):
    """Raised when the wavefunction reaches the edge of the momentum comb."""


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ControlProtocol:
    """Piecewise shaking phi(t) = A_k sin(omega_s t), one half carrier period per segment."""

    segment_amplitudes: tuple
    omega_s: float = OMEGA_S

    def __post_init__(self):
        object.__setattr__(self, "segment_amplitudes", tuple(float(x) for x in self.segment_amplitudes))
        if self.omega_s <= 0:
            raise ValueError("omega_s must be positive")

    @property
    def n_segments(self) -> int:
        return len(self.segment_amplitudes)

    @property
    def segment_duration(self) -> float:
        return math.pi / self.omega_s

    @property
    def total_time(self) -> float:
        return self.n_segments * self.segment_duration

    def prefix(self, k: int) -> "ControlProtocol":
        return replace(self, segment_amplitudes=self.segment_amplitudes[:k])


@dataclass(frozen=True)
class EstimationPoint:
    """Parameter point b = (a, V_L): acceleration in g, lattice depth in E_R."""

    a: float = 0.0
    V_L: float = 10.0

    def __post_init__(self):
        if self.V_L < 0:
            raise ValueError("lattice depth must be non-negative")

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.V_L])


@dataclass
class AugmentedState:
    psi: np.ndarray
    dpsi_da: np.ndarray
    dpsi_dV: np.ndarray
    time: float
    basis: MomentumBasis
    warnings: list = field(default_factory=list)
    edge: float = 0.0  # largest edge-of-comb occupation seen so far

    @classmethod
    def initial(cls, psi: np.ndarray, basis: MomentumBasis) -> "AugmentedState":
        psi = np.array(psi, dtype=complex)
        return cls(psi, np.zeros_like(psi), np.zeros_like(psi), 0.0, basis)

    def copy(self) -> "AugmentedState":
        return AugmentedState(
            self.psi.copy(), self.dpsi_da.copy(), self.dpsi_dV.copy(),
            self.time, self.basis, list(self.warnings), self.edge,
        )

    @property
    def norm(self) -> float:
        return float(np.vdot(self.psi, self.psi).real)


def control_value(protocol: ControlProtocol, t: float) -> float:
    T = protocol.total_time
    if not (0.0 <= t <= T):
        raise ValueError(f"time {t!r} outside [0, {T!r}]")
    k = min(int(t // protocol.segment_duration), protocol.n_segments - 1)
    return protocol.segment_amplitudes[k] * math.sin(protocol.omega_s * t)


def apply_hamiltonian(amps, b: EstimationPoint, phi: float, t: float, basis: MomentumBasis,
                      g_recoil: float = DEFAULT_SCALES.g_recoil) -> np.ndarray:
    """H(t) psi in the boosted frame: (p_n - kappa a t)^2 diagonal plus the lattice couplings."""
    amps = np.asarray(amps, dtype=complex)
    kin = (basis.momenta - g_recoil * b.a * t) ** 2
    return kin * amps + b.V_L * (lattice_matrix(basis, phi) @ amps)


def steps_for(protocol: ControlProtocol, dt: float | None) -> int:
    seg = protocol.segment_duration
    if dt is None:
        return STEPS_PER_SEGMENT
    n = int(round(seg / dt))
    if n < 1 or abs(n * dt - seg) > 1e-9 * seg:
        raise ValueError(f"dt={dt!r} does not divide the segment duration {seg!r}")
    return n


def propagate_segments(state: AugmentedState, b: EstimationPoint, amplitudes, omega_s: float,
                       first_segment: int, steps: int = STEPS_PER_SEGMENT,
                       g_recoil: float = DEFAULT_SCALES.g_recoil, check: bool = True) -> AugmentedState:
    """Advance ``state`` through consecutive segments starting at index ``first_segment``.

    With ``check=False`` the norm-drift and edge-warning checks are skipped
    (the edge abort still applies); callers then run ``check_integrity``.
    """
    seg = math.pi / omega_s
    h = seg / steps
    out = state.copy()
    psi = out.psi[None, :].copy()
    dpa = out.dpsi_da[None, :].copy()
    dpv = out.dpsi_dV[None, :].copy()
    p = np.ascontiguousarray(out.basis.momenta, dtype=float)
    edge = 0.0
    for j, amp in enumerate(amplitudes):
        t0 = (first_segment + j) * seg
        e = kernels.rk4_segment(psi, dpa, dpv, p, np.array([b.a]), np.array([b.V_L]),
                                g_recoil, float(amp), omega_s, t0, h, steps)
        edge = max(edge, float(e[0]))
        if edge > EDGE_ABORT:
            _raise_edge(psi[0], edge, f"in segment {first_segment + j}")
    out.psi, out.dpsi_da, out.dpsi_dV = psi[0], dpa[0], dpv[0]
    out.time = (first_segment + len(amplitudes)) * seg
    out.edge = max(state.edge, edge)
    if check:
        check_integrity(out)
    return out


def _raise_edge(psi: np.ndarray, edge: float, where: str):
    """Edge abort; a diverging norm means the step is unstable rather than the comb too small."""
    drift = abs(float(np.vdot(psi, psi).real) - 1.0)
    if not drift <= 1e-3:
        raise IntegrationError(f"integration unstable {where} (norm drift {drift:.3g}); use a smaller dt")
    raise TruncationError(f"edge-of-comb occupation {edge:.3g} {where}; enlarge n_max")


def check_integrity(state: AugmentedState) -> None:
    """Raise on norm drift beyond tolerance; warn when the comb edge was reached."""
    _check(state, state.edge)


def _check(state: AugmentedState, edge: float) -> None:
    drift = abs(state.norm - 1.0)
    if drift > NORM_TOLERANCE:
        raise IntegrationError(f"norm drift {drift:.3g} exceeds {NORM_TOLERANCE}; use a smaller dt")
    if edge > EDGE_WARN:
        msg = f"edge-of-comb occupation reached {edge:.3g}"
        state.warnings.append(msg)
        warnings.warn(msg, TruncationWarning, stacklevel=3)


def propagate_augmented(initial: AugmentedState, b: EstimationPoint, protocol: ControlProtocol,
                        dt: float | None = None, *,
                        g_recoil: float = DEFAULT_SCALES.g_recoil) -> AugmentedState:
    """Integrate the state and its parameter derivatives over the whole protocol.

    ``dt`` (in 1/omega_R) must divide the segment duration; the default is a
    1024th of a segment.  The derivative vectors of ``initial`` are normally zero.
    """
    if initial.time != 0.0:
        raise ValueError("propagation starts at t = 0")
    steps = steps_for(protocol, dt)
    return propagate_segments(initial, b, protocol.segment_amplitudes, protocol.omega_s, 0,
                              steps, g_recoil)


def propagate_batch(psi0: np.ndarray, basis: MomentumBasis, a_values, V_values,
                    protocol: ControlProtocol, dt: float | None = None,
                    g_recoil: float = DEFAULT_SCALES.g_recoil):
    """Propagate one initial state at many (a, V_L) points.

    Returns (psi, dpsi_da, dpsi_dV, edge) with a leading batch axis.  The
    initial state is shared, so callers wanting the V-dependent ground state
    should use ``propagate_grid_states``.
    """
    a_values = np.asarray(a_values, dtype=float)
    V_values = np.asarray(V_values, dtype=float)
    nb = a_values.size
    psi = np.ascontiguousarray(np.broadcast_to(psi0, (nb, basis.dim)), dtype=complex).copy()
    return _run_batch(psi, basis, a_values, V_values, protocol, dt, g_recoil)


def _run_batch(psi, basis, a_values, V_values, protocol, dt, g_recoil):
    steps = steps_for(protocol, dt)
    seg = protocol.segment_duration
    h = seg / steps
    dpa = np.zeros_like(psi)
    dpv = np.zeros_like(psi)
    p = np.ascontiguousarray(basis.momenta, dtype=float)
    edge = np.zeros(psi.shape[0])
    for k, amp in enumerate(protocol.segment_amplitudes):
        e = kernels.rk4_segment(psi, dpa, dpv, p, a_values, V_values, g_recoil, float(amp),
                                protocol.omega_s, k * seg, h, steps)
        np.maximum(edge, e, out=edge)
    return psi, dpa, dpv, edge


def propagate_grid_states(basis: MomentumBasis, a_values, V_values, protocol: ControlProtocol,
                          dt: float | None = None, g_recoil: float = DEFAULT_SCALES.g_recoil,
                          prep_V: float | None = None):
    """Propagate the ground state at every (a, V_L) point, checking each point's integrity.

    With ``prep_V`` every point starts from the ground state of that depth
    (the preparation model of the augmented derivatives, which start at zero);
    otherwise each point starts from the ground state of its own V_L.
    """
    from .physcore import ground_state

    a_values = np.asarray(a_values, dtype=float).ravel()
    V_values = np.asarray(V_values, dtype=float).ravel()
    cache = {}
    psi = np.empty((a_values.size, basis.dim), dtype=complex)
    for i, V in enumerate(V_values):
        key = V if prep_V is None else prep_V
        if key not in cache:
            cache[key] = ground_state(key, basis)
        psi[i] = cache[key]
    psi, dpa, dpv, edge = _run_batch(psi, basis, a_values, V_values, protocol, dt, g_recoil)
    norm = np.einsum("ij,ij->i", psi.conj(), psi).real
    bad = np.flatnonzero(np.abs(norm - 1.0) > NORM_TOLERANCE)
    if bad.size:
        i = bad[0]
        raise IntegrationError(
            f"norm drift {abs(norm[i] - 1):.3g} at a={float(a_values[i])!r}, V_L={float(V_values[i])!r}")
    over = np.flatnonzero(edge > EDGE_ABORT)
    if over.size:
        i = over[0]
        raise TruncationError(
            f"edge-of-comb occupation {edge[i]:.3g} at a={float(a_values[i])!r}, V_L={float(V_values[i])!r}")
    return psi, dpa, dpv, edge


def trajectory(initial: AugmentedState, b: EstimationPoint, protocol: ControlProtocol,
               samples_per_segment: int = 1, dt: float | None = None,
               g_recoil: float = DEFAULT_SCALES.g_recoil) -> list[AugmentedState]:
    """States at t = 0 and at ``samples_per_segment`` evenly spaced times in every segment."""
    steps = steps_for(protocol, dt)
    if steps % samples_per_segment:
        raise ValueError("samples_per_segment must divide the steps per segment")
    sub = steps // samples_per_segment
    seg = protocol.segment_duration
    h = seg / steps
    states = [initial.copy()]
    cur = initial.copy()
    psi, dpa, dpv = cur.psi[None].copy(), cur.dpsi_da[None].copy(), cur.dpsi_dV[None].copy()
    p = np.ascontiguousarray(cur.basis.momenta, dtype=float)
    edge = 0.0
    for k, amp in enumerate(protocol.segment_amplitudes):
        for s in range(samples_per_segment):
            e = kernels.rk4_segment(psi, dpa, dpv, p, np.array([b.a]), np.array([b.V_L]), g_recoil,
                                    float(amp), protocol.omega_s, k * seg + s * sub * h, h, sub)
            edge = max(edge, float(e[0]))
            if edge > EDGE_ABORT:
                _raise_edge(psi[0], edge, f"in segment {k}")
            states.append(AugmentedState(psi[0].copy(), dpa[0].copy(), dpv[0].copy(),
                                         k * seg + (s + 1) * sub * h, cur.basis))
    _check(states[-1], edge)
    return states


@dataclass(frozen=True)
class MomentumDistribution:
    probabilities: np.ndarray
    momenta: np.ndarray


def momentum_distribution(state: AugmentedState) -> MomentumDistribution:
    return MomentumDistribution(np.abs(state.psi) ** 2, state.basis.momenta.copy())


def band_occupations(state: AugmentedState, V_L: float, n_bands: int) -> np.ndarray:
    if n_bands > state.basis.dim:
        raise ValueError("more bands requested than comb states")
    dec = bloch_diagonalize(V_L, state.basis, 0.0, state.psi)
    return dec.occupations[:n_bands]


def position_density(state: AugmentedState, sigma_p: float = 0.1, points: int = 256,
                     periods: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Density of the Gaussian-broadened comb on ``periods`` lattice periods around x = 0.

    Broadening each comb line to a Gaussian of width ``sigma_p`` (hbar*k_L)
    multiplies the position density by the envelope exp(-(sigma_p x)^2); the
    result is normalized on the sampled window.  ``x`` is returned as k_L*x.
    """
    if sigma_p <= 0:
        raise ValueError("sigma_p must be positive")
    half = 0.5 * math.pi * periods
    x = np.linspace(-half, half, points * periods, endpoint=False)
    amp = np.exp(1j * np.outer(x, state.basis.momenta)) @ state.psi
    rho = np.abs(amp) ** 2 * np.exp(-((sigma_p * x) ** 2))
    dx = x[1] - x[0]
    return x, rho / (rho.sum() * dx)


def mean_position_phase(state: AugmentedState) -> float:
    """arg <exp(2i k_L x)>, the within-cell position of the wavepacket as a phase."""
    c = state.psi
    z = np.vdot(c[1:], c[:-1])
    if abs(z) < 1e-12:
        return 0.0
    return float(np.angle(z))
