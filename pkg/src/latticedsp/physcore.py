"""Physical scales, the truncated momentum comb and Bloch-band diagnostics.

Everything downstream works in recoil units: energies in E_R, times in
1/omega_R, momenta in hbar*k_L, positions as the phase k_L*x, lattice depth in
E_R and acceleration in units of standard gravity g.  In these units the
kinetic energy of comb state n is simply (2n + q)**2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants

HBAR = constants.hbar
AMU = constants.atomic_mass
G_STANDARD = constants.g  # 9.80665

RB87_MASS_AMU = 86.9
LATTICE_WAVELENGTH = 1064e-9


@dataclass(frozen=True)
class PhysicalScales:
    """Recoil scales for an atom of ``mass`` in a lattice of ``wavelength_L``."""

    mass: float
    wavelength_L: float
    k_L: float
    E_R: float
    omega_R: float
    v_R: float
    g: float = G_STANDARD

    @property
    def a_R(self) -> float:
        """Recoil acceleration v_R * omega_R (m/s^2)."""
        return self.v_R * self.omega_R

    @property
    def g_recoil(self) -> float:
        """Standard gravity expressed in recoil accelerations."""
        return self.g / self.a_R

    # unit conversions used at the I/O boundary
    def time_to_si(self, t: float) -> float:
        return t / self.omega_R

    def time_from_si(self, t_si: float) -> float:
        return t_si * self.omega_R

    def energy_to_si(self, e: float) -> float:
        return e * self.E_R

    def momentum_to_si(self, p: float) -> float:
        return p * HBAR * self.k_L

    def accel_to_si(self, a: float) -> float:
        return a * self.g

    def phase_wrap_acceleration(self, t: float) -> float:
        """Acceleration (in g) at which k_L*a*t**2 advances by 2*pi; ``t`` in 1/omega_R."""
        t_si = self.time_to_si(t)
        return 2.0 * math.pi / (self.k_L * t_si**2) / self.g

    def as_dict(self) -> dict:
        return {
            "mass": self.mass,
            "wavelength_L": self.wavelength_L,
            "k_L": self.k_L,
            "E_R": self.E_R,
            "omega_R": self.omega_R,
            "v_R": self.v_R,
            "g": self.g,
        }


def recoil_units(mass: float, wavelength: float, g: float = G_STANDARD) -> PhysicalScales:
    """Derive the recoil scales from the atomic mass (kg) and lattice wavelength (m)."""
    if not (mass > 0 and wavelength > 0):
        raise ValueError(f"mass and wavelength must be positive, got {mass!r}, {wavelength!r}")
    k_L = 2.0 * math.pi / wavelength
    E_R = HBAR**2 * k_L**2 / (2.0 * mass)
    return PhysicalScales(
        mass=mass,
        wavelength_L=wavelength,
        k_L=k_L,
        E_R=E_R,
        omega_R=E_R / HBAR,
        v_R=HBAR * k_L / mass,
        g=g,
    )


DEFAULT_SCALES = recoil_units(RB87_MASS_AMU * AMU, LATTICE_WAVELENGTH)


@dataclass(frozen=True)
class MomentumBasis:
    """Comb of momenta p_n = (2n + q) hbar k_L for n = -n_max..n_max."""

    n_max: int
    q: float = 0.0
    momenta: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = np.arange(-self.n_max, self.n_max + 1)
        p = 2.0 * n + self.q
        p.setflags(write=False)
        object.__setattr__(self, "momenta", p)

    @property
    def dim(self) -> int:
        return 2 * self.n_max + 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    def index_of(self, n: int) -> int:
        """Array position of comb index ``n``."""
        if abs(n) > self.n_max:
            raise IndexError(f"comb index {n} outside +-{self.n_max}")
        return n + self.n_max

    def basis_state(self, n: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index_of(n)] = 1.0
        return v


def build_basis(n_max: int, q: float = 0.0) -> MomentumBasis:
    if int(n_max) != n_max or n_max < 1:
        raise ValueError(f"n_max must be an integer >= 1, got {n_max!r}")
    if not (-1.0 <= q < 1.0):
        raise ValueError(f"quasimomentum q must lie in [-1, 1), got {q!r}")
    return MomentumBasis(int(n_max), float(q))


def q_grid(count: int = 1, width: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian-weighted quasimomentum samples and their normalized weights.

    ``width`` is the standard deviation of the q distribution in hbar*k_L.  A
    single point returns q = 0 with unit weight.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if count == 1:
        return np.zeros(1), np.ones(1)
    q = np.linspace(-2.5 * width, 2.5 * width, count)
    if np.any(q < -1.0) or np.any(q >= 1.0):
        raise ValueError("q grid leaves the first Brillouin zone; reduce width")
    w = np.exp(-0.5 * (q / width) ** 2)
    return q, w / w.sum()


def lattice_matrix(basis: MomentumBasis, phi: float = 0.0) -> np.ndarray:
    """Matrix of -(1/2)cos(2 k_L x + phi) on the comb (the lattice shape per unit depth)."""
    d = basis.dim
    m = np.zeros((d, d), dtype=complex)
    idx = np.arange(d - 1)
    m[idx + 1, idx] = -0.25 * np.exp(1j * phi)
    m[idx, idx + 1] = -0.25 * np.exp(-1j * phi)
    return m


def lattice_hamiltonian(V_L: float, basis: MomentumBasis, phi: float = 0.0) -> np.ndarray:
    return np.diag(basis.momenta**2).astype(complex) + V_L * lattice_matrix(basis, phi)


def fix_gauge(vec: np.ndarray, ref: int | None = None) -> np.ndarray:
    """Remove the global phase of ``vec``.

    With ``ref`` the component at that position is made real and non-negative.
    Otherwise the first component whose magnitude reaches half the largest
    magnitude is used, which is stable under rounding for parity pairs.
    """
    mag = np.abs(vec)
    if ref is None or mag[ref] < 1e-12 * mag.max():
        ref = int(np.argmax(mag >= 0.5 * mag.max()))
    c = vec[ref]
    if abs(c) == 0.0:
        return vec.copy()
    return vec * (abs(c) / c)


@dataclass(frozen=True)
class BlochDecomposition:
    band_energies: np.ndarray
    band_states: np.ndarray  # columns are the band vectors
    occupations: np.ndarray | None = None

    def band(self, j: int) -> np.ndarray:
        return self.band_states[:, j]


def bloch_diagonalize(
    V_L: float, basis: MomentumBasis, phi: float = 0.0, state: np.ndarray | None = None
) -> BlochDecomposition:
    """Bloch bands of the static lattice at the comb's quasimomentum.

    If ``state`` is given its band occupations are returned as well.
    """
    if V_L < 0:
        raise ValueError("lattice depth must be non-negative")
    H = lattice_hamiltonian(V_L, basis, phi)
    if basis.q == 0.0 and phi == 0.0:
        energies, vecs = _parity_eigh(H, basis.n_max)
    else:
        energies, vecs = np.linalg.eigh(H)
    for j in range(vecs.shape[1]):
        vecs[:, j] = fix_gauge(vecs[:, j])
    occ = None
    if state is not None:
        occ = np.abs(vecs.conj().T @ np.asarray(state, dtype=complex)) ** 2
    return BlochDecomposition(energies, vecs, occ)


def _parity_eigh(H: np.ndarray, n_max: int):
    """eigh within the even and odd subspaces, so near-degenerate pairs stay parity eigenstates."""
    d = 2 * n_max + 1
    r = math.sqrt(0.5)
    even = np.zeros((d, n_max + 1))
    odd = np.zeros((d, n_max))
    even[n_max, 0] = 1.0
    for k in range(1, n_max + 1):
        even[n_max + k, k] = even[n_max - k, k] = r
        odd[n_max + k, k - 1] = r
        odd[n_max - k, k - 1] = -r
    vals, vecs = [], []
    for P in (even, odd):
        e, u = np.linalg.eigh(P.T @ H @ P)
        vals.append(e)
        vecs.append(P @ u)
    vals = np.concatenate(vals)
    vecs = np.concatenate(vecs, axis=1)
    order = np.argsort(vals, kind="stable")
    return vals[order], vecs[:, order].astype(complex)


def ground_state(V_L: float, basis: MomentumBasis) -> np.ndarray:
    """Lowest band state, phase fixed so the n = 0 amplitude is real and non-negative."""
    dec = bloch_diagonalize(V_L, basis)
    return fix_gauge(dec.band(0), ref=basis.index_of(0))
