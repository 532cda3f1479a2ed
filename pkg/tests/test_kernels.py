import math

import numpy as np
import pytest

from latticedsp import kernels
from latticedsp.physcore import DEFAULT_SCALES, build_basis, ground_state

pytestmark = pytest.mark.skipif(kernels.compiled_rk4_segment is None, reason="compiled extension not built")


def _inputs(B=3, n_max=10, seed=0):
    rng = np.random.default_rng(seed)
    basis = build_basis(n_max)
    psi = np.tile(ground_state(10.0, basis), (B, 1)).astype(complex)
    dpa = (rng.normal(size=psi.shape) + 1j * rng.normal(size=psi.shape)) * 0.01
    dpv = (rng.normal(size=psi.shape) + 1j * rng.normal(size=psi.shape)) * 0.01
    a = rng.uniform(-0.1, 0.1, B)
    V = rng.uniform(9.0, 11.0, B)
    return psi, dpa, dpv, basis.momenta.copy(), a, V


@pytest.mark.parametrize("amp", [0.0, 7 * math.pi / 12, 15 * math.pi / 12])
def test_backends_agree(amp):
    omega = 11.5
    h = math.pi / omega / 256
    outs = []
    for fn in (kernels.python_rk4_segment, kernels.compiled_rk4_segment):
        psi, dpa, dpv, p, a, V = _inputs()
        edge = fn(psi, dpa, dpv, p, a, V, DEFAULT_SCALES.g_recoil, amp, omega, 3 * math.pi / omega, h, 256)
        outs.append((psi, dpa, dpv, np.asarray(edge)))
    for x, y in zip(*outs):
        np.testing.assert_allclose(x, y, rtol=0, atol=1e-12)


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")
    assert kernels.rk4_segment is (kernels.compiled_rk4_segment if kernels.BACKEND == "cython"
                                   else kernels.python_rk4_segment)
