# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 kernel for the augmented lattice state (psi, d_a psi, d_V psi)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos
from libc.stdlib cimport malloc, free

cnp.import_array()

ctypedef double complex cplx


cdef inline void _rhs(double t, const cplx* psi, const cplx* dpa, const cplx* dpv,
                      cplx* opsi, cplx* opa, cplx* opv,
                      const double* p, int d, double a, double V, double kappa,
                      double amp, double omega) noexcept nogil:
    cdef double phi = amp * sin(omega * t)
    cdef cplx up = -0.25 * (cos(phi) + 1j * sin(phi))
    cdef cplx dn = -0.25 * (cos(phi) - 1j * sin(phi))
    cdef cplx lpsi, lpa, lpv
    cdef double pi_n, kin, src
    cdef int n
    for n in range(d):
        lpsi = 0.0
        lpa = 0.0
        lpv = 0.0
        if n > 0:
            lpsi = lpsi + up * psi[n - 1]
            lpa = lpa + up * dpa[n - 1]
            lpv = lpv + up * dpv[n - 1]
        if n < d - 1:
            lpsi = lpsi + dn * psi[n + 1]
            lpa = lpa + dn * dpa[n + 1]
            lpv = lpv + dn * dpv[n + 1]
        pi_n = p[n] - kappa * a * t
        kin = pi_n * pi_n
        src = -2.0 * kappa * t * pi_n
        # -i * (H x + source)
        opsi[n] = -1j * (kin * psi[n] + V * lpsi)
        opa[n] = -1j * (kin * dpa[n] + V * lpa + src * psi[n])
        opv[n] = -1j * (kin * dpv[n] + V * lpv + lpsi)


def rk4_segment(cplx[:, ::1] psi, cplx[:, ::1] dpa, cplx[:, ::1] dpv,
                const double[::1] p, a, V, double kappa, double amp, double omega,
                double t0, double h, int nsteps):
    """Advance (psi, dpa, dpv) in place by ``nsteps`` RK4 steps of size ``h``.

    Returns the largest occupation of the two outermost comb states seen
    after any step, per batch row.
    """
    cdef double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] Vv = np.ascontiguousarray(V, dtype=np.float64)
    cdef int B = psi.shape[0]
    cdef int d = psi.shape[1]
    edge_arr = np.zeros(B)
    cdef double[::1] edge = edge_arr
    cdef cplx* buf = <cplx*> malloc(15 * d * sizeof(cplx))
    if buf == NULL:
        raise MemoryError()
    cdef cplx* k1 = buf
    cdef cplx* k2 = buf + 3 * d
    cdef cplx* k3 = buf + 6 * d
    cdef cplx* k4 = buf + 9 * d
    cdef cplx* y = buf + 12 * d
    cdef int b, k, n
    cdef double t, hh = 0.5 * h, w = h / 6.0, occ
    cdef cplx* ps
    cdef cplx* pa
    cdef cplx* pv
    try:
        with nogil:
            for b in range(B):
                ps = &psi[b, 0]
                pa = &dpa[b, 0]
                pv = &dpv[b, 0]
                for k in range(nsteps):
                    t = t0 + k * h
                    _rhs(t, ps, pa, pv, k1, k1 + d, k1 + 2 * d,
                         &p[0], d, av[b], Vv[b], kappa, amp, omega)
                    for n in range(d):
                        y[n] = ps[n] + hh * k1[n]
                        y[d + n] = pa[n] + hh * k1[d + n]
                        y[2 * d + n] = pv[n] + hh * k1[2 * d + n]
                    _rhs(t + hh, y, y + d, y + 2 * d, k2, k2 + d, k2 + 2 * d,
                         &p[0], d, av[b], Vv[b], kappa, amp, omega)
                    for n in range(d):
                        y[n] = ps[n] + hh * k2[n]
                        y[d + n] = pa[n] + hh * k2[d + n]
                        y[2 * d + n] = pv[n] + hh * k2[2 * d + n]
                    _rhs(t + hh, y, y + d, y + 2 * d, k3, k3 + d, k3 + 2 * d,
                         &p[0], d, av[b], Vv[b], kappa, amp, omega)
                    for n in range(d):
                        y[n] = ps[n] + h * k3[n]
                        y[d + n] = pa[n] + h * k3[d + n]
                        y[2 * d + n] = pv[n] + h * k3[2 * d + n]
                    _rhs(t + h, y, y + d, y + 2 * d, k4, k4 + d, k4 + 2 * d,
                         &p[0], d, av[b], Vv[b], kappa, amp, omega)
                    for n in range(d):
                        ps[n] = ps[n] + w * (k1[n] + 2.0 * k2[n] + 2.0 * k3[n] + k4[n])
                        pa[n] = pa[n] + w * (k1[d + n] + 2.0 * k2[d + n]
                                             + 2.0 * k3[d + n] + k4[d + n])
                        pv[n] = pv[n] + w * (k1[2 * d + n] + 2.0 * k2[2 * d + n]
                                             + 2.0 * k3[2 * d + n] + k4[2 * d + n])
                    occ = (ps[0].real * ps[0].real + ps[0].imag * ps[0].imag
                           + ps[d - 1].real * ps[d - 1].real + ps[d - 1].imag * ps[d - 1].imag)
                    if occ > edge[b]:
                        edge[b] = occ
    finally:
        free(buf)
    return edge_arr
