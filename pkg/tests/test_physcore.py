import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latticedsp.physcore import (
    AMU,
    DEFAULT_SCALES,
    HBAR,
    bloch_diagonalize,
    build_basis,
    fix_gauge,
    ground_state,
    lattice_hamiltonian,
    q_grid,
    recoil_units,
)

from oracles import comb_from_fft, fd_bloch_bands

# direct arithmetic with hbar = 1.054571817e-34 J s and amu = 1.66053907e-27 kg
_M = 86.9 * 1.66053907e-27
_K = 2 * math.pi / 1064e-9
E_R_OVER_H = 1.054571817e-34 * _K**2 / (2 * _M) / (2 * math.pi)
OMEGA_R = 1.054571817e-34 * _K**2 / (2 * _M)


class TestRecoilUnits:
    def test_rubidium_scales(self):
        s = recoil_units(86.9 * AMU, 1064e-9)
        assert s.E_R / (2 * math.pi * HBAR) == pytest.approx(E_R_OVER_H, rel=1e-7)
        assert s.omega_R == pytest.approx(OMEGA_R, rel=1e-7)
        assert s.E_R / (2 * math.pi * HBAR) == pytest.approx(2.03e3, rel=0.01)
        assert s.omega_R == pytest.approx(1.27e4, rel=0.01)

    def test_internal_consistency(self):
        s = DEFAULT_SCALES
        assert s.k_L == pytest.approx(2 * math.pi / s.wavelength_L, rel=1e-14)
        assert s.E_R == pytest.approx(HBAR**2 * s.k_L**2 / (2 * s.mass), rel=1e-14)
        assert s.omega_R == pytest.approx(s.E_R / HBAR, rel=1e-14)
        assert s.v_R == pytest.approx(HBAR * s.k_L / s.mass, rel=1e-14)
        assert all(v > 0 for v in (s.mass, s.wavelength_L, s.k_L, s.E_R, s.omega_R, s.v_R, s.g))

    def test_half_wavelength_quadruples_energy(self):
        a = recoil_units(1e-25, 1e-6)
        b = recoil_units(1e-25, 0.5e-6)
        assert b.E_R / a.E_R == pytest.approx(4.0, rel=1e-14)

    def test_double_mass_halves_energy_and_velocity(self):
        a = recoil_units(1e-25, 1e-6)
        b = recoil_units(2e-25, 1e-6)
        assert b.E_R / a.E_R == pytest.approx(0.5, rel=1e-14)
        assert b.v_R / a.v_R == pytest.approx(0.5, rel=1e-14)

    @pytest.mark.parametrize("mass,wl", [(0.0, 1e-6), (-1.0, 1e-6), (1e-25, 0.0), (1e-25, -1e-6)])
    def test_rejects_non_positive(self, mass, wl):
        with pytest.raises(ValueError):
            recoil_units(mass, wl)

    def test_si_round_trip(self):
        s = DEFAULT_SCALES
        assert s.time_from_si(s.time_to_si(3.7)) == pytest.approx(3.7, rel=1e-15)
        assert s.g_recoil == pytest.approx(s.g / (s.v_R * s.omega_R), rel=1e-15)


class TestBasis:
    def test_minimal(self):
        np.testing.assert_array_equal(build_basis(1, 0.0).momenta, [-2.0, 0.0, 2.0])

    def test_default_span(self):
        b = build_basis(10)
        assert b.dim == 21 and b.momenta[0] == -20 and b.momenta[-1] == 20

    def test_shifted(self):
        np.testing.assert_array_equal(build_basis(2, 0.5).momenta, [-3.5, -1.5, 0.5, 2.5, 4.5])

    @given(st.integers(1, 30), st.floats(-1.0, 0.999))
    def test_structure(self, n_max, q):
        b = build_basis(n_max, q)
        assert b.dim % 2 == 1 and b.dim == 2 * n_max + 1
        np.testing.assert_allclose(np.diff(b.momenta), 2.0, rtol=0, atol=1e-12)
        assert np.all(np.diff(b.momenta) > 0)

    @pytest.mark.parametrize("n_max,q", [(0, 0.0), (-3, 0.0), (2, 1.0), (2, -1.5)])
    def test_invalid(self, n_max, q):
        with pytest.raises(ValueError):
            build_basis(n_max, q)

    def test_momenta_read_only(self):
        with pytest.raises(ValueError):
            build_basis(2).momenta[0] = 1.0

    def test_q_grid(self):
        q, w = q_grid(1)
        assert q.tolist() == [0.0] and w.tolist() == [1.0]
        q, w = q_grid(7, 0.1)
        assert w.sum() == pytest.approx(1.0) and np.allclose(w, w[::-1])


class TestBloch:
    def test_free_bands(self):
        b = build_basis(4, 0.3)
        dec = bloch_diagonalize(0.0, b)
        np.testing.assert_allclose(dec.band_energies, np.sort(b.momenta**2), atol=1e-12)
        assert np.allclose(np.abs(dec.band_states), np.abs(dec.band_states).round())

    @pytest.mark.parametrize("q", [0.0, 0.4])
    def test_gap_matches_position_space_oracle(self, q):
        E, _ = fd_bloch_bands(10.0, q, points=512)
        dec = bloch_diagonalize(10.0, build_basis(10, q))
        gap = dec.band_energies[1] - dec.band_energies[0]
        assert gap == pytest.approx(E[1] - E[0], rel=1e-6)

    def test_ground_state_overlap_with_oracle(self):
        _, C = fd_bloch_bands(10.0, 0.0, points=512)
        c = comb_from_fft(C, 10)[:, 0]
        g = ground_state(10.0, build_basis(10))
        assert abs(np.vdot(c, g)) ** 2 >= 1 - 1e-8

    def test_orthonormal(self):
        dec = bloch_diagonalize(10.0, build_basis(10))
        U = dec.band_states
        np.testing.assert_allclose(U.conj().T @ U, np.eye(21), atol=1e-10)

    def test_occupations_sum_to_one(self, rng):
        b = build_basis(10)
        v = rng.normal(size=21) + 1j * rng.normal(size=21)
        v /= np.linalg.norm(v)
        assert bloch_diagonalize(10.0, b, state=v).occupations.sum() == pytest.approx(1.0, abs=1e-8)

    def test_parity_of_eigenstates(self):
        dec = bloch_diagonalize(10.0, build_basis(10))
        for j in range(21):
            c = dec.band(j)
            assert min(np.max(np.abs(c - c[::-1])), np.max(np.abs(c + c[::-1]))) < 1e-10

    def test_truncation_stability(self):
        e10 = bloch_diagonalize(10.0, build_basis(10)).band_energies[0]
        e14 = bloch_diagonalize(10.0, build_basis(14)).band_energies[0]
        assert abs(e10 - e14) < 1e-10

    def test_negative_depth(self):
        with pytest.raises(ValueError):
            bloch_diagonalize(-1.0, build_basis(2))

    def test_hamiltonian_hermitian(self):
        H = lattice_hamiltonian(7.0, build_basis(5, 0.2), phi=0.7)
        np.testing.assert_allclose(H, H.conj().T, atol=0)


class TestGroundState:
    def test_free(self):
        b = build_basis(3, 0.25)
        np.testing.assert_allclose(ground_state(0.0, b), b.basis_state(0), atol=1e-15)

    def test_symmetric_and_gauge(self):
        b = build_basis(10)
        g = ground_state(10.0, b)
        np.testing.assert_allclose(g, g[::-1], atol=1e-12)
        c0 = g[b.index_of(0)]
        assert c0.real > 0 and c0.imag == 0.0

    def test_fix_gauge_removes_phase(self, rng):
        v = rng.normal(size=5) + 1j * rng.normal(size=5)
        np.testing.assert_allclose(fix_gauge(v * np.exp(0.8j), 2), fix_gauge(v, 2), atol=1e-14)
