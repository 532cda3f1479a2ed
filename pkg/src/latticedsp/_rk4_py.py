"""Pure-numpy RK4 kernel for the augmented lattice state.

Same contract as the compiled ``_rk4`` extension; used when the extension is
not built or when LATTICEDSP_BACKEND=python.
"""
import numpy as np


def _rhs(t, psi, dpa, dpv, p, a, V, kappa, amp, omega):
    # psi, dpa, dpv: (B, D); a, V: (B, 1)
    phi = amp * np.sin(omega * t)
    up = -0.25 * np.exp(1j * phi)
    dn = np.conj(up)

    def lat(x):
        out = np.empty_like(x)
        out[:, 0] = dn * x[:, 1]
        out[:, -1] = up * x[:, -2]
        out[:, 1:-1] = up * x[:, :-2] + dn * x[:, 2:]
        return out

    pi = p[None, :] - kappa * a * t
    kin = pi * pi
    src_a = -2.0 * kappa * t * pi
    lpsi = lat(psi)
    hpsi = kin * psi + V * lpsi
    hpa = kin * dpa + V * lat(dpa)
    hpv = kin * dpv + V * lat(dpv)
    return -1j * hpsi, -1j * (hpa + src_a * psi), -1j * (hpv + lpsi)


def rk4_segment(psi, dpa, dpv, p, a, V, kappa, amp, omega, t0, h, nsteps):
    """Advance (psi, dpa, dpv) in place by ``nsteps`` RK4 steps of size ``h``.

    ``amp`` is the shaking amplitude of phi(t) = amp*sin(omega*t) over the
    whole interval.  Returns the largest occupation of the two outermost comb
    states seen after any step, per batch row.
    """
    a = np.asarray(a, dtype=float)[:, None]
    V = np.asarray(V, dtype=float)[:, None]
    p = np.asarray(p, dtype=float)
    edge = np.zeros(psi.shape[0])
    for k in range(nsteps):
        t = t0 + k * h
        k1 = _rhs(t, psi, dpa, dpv, p, a, V, kappa, amp, omega)
        y = [psi + 0.5 * h * k1[0], dpa + 0.5 * h * k1[1], dpv + 0.5 * h * k1[2]]
        k2 = _rhs(t + 0.5 * h, *y, p, a, V, kappa, amp, omega)
        y = [psi + 0.5 * h * k2[0], dpa + 0.5 * h * k2[1], dpv + 0.5 * h * k2[2]]
        k3 = _rhs(t + 0.5 * h, *y, p, a, V, kappa, amp, omega)
        y = [psi + h * k3[0], dpa + h * k3[1], dpv + h * k3[2]]
        k4 = _rhs(t + h, *y, p, a, V, kappa, amp, omega)
        w = h / 6.0
        psi += w * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        dpa += w * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        dpv += w * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        occ = np.abs(psi[:, 0]) ** 2 + np.abs(psi[:, -1]) ** 2
        np.maximum(edge, occ, out=edge)
    return edge
