"""Time the compiled RK4 kernel against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat 5] [--n-max 10]

Each case advances B augmented states through one shaking segment at the
default step (segment/1024) and reports the best wall time of ``--repeat``
runs together with the speedup of the compiled kernel.
"""
import argparse
import math
import time

import numpy as np

from latticedsp import kernels
from latticedsp.dynamics import STEPS_PER_SEGMENT
from latticedsp.physcore import DEFAULT_SCALES, build_basis, ground_state


def _case(B, n_max):
    basis = build_basis(n_max)
    psi = np.tile(ground_state(10.0, basis), (B, 1)).astype(complex)
    zeros = np.zeros_like(psi)
    a = np.linspace(-0.1, 0.1, B)
    V = np.full(B, 10.0)
    return psi, zeros, zeros.copy(), basis.momenta.copy(), a, V


def best_time(fn, B, n_max, repeat, steps=STEPS_PER_SEGMENT, omega=11.5):
    h = math.pi / omega / steps
    times = []
    for _ in range(repeat):
        psi, dpa, dpv, p, a, V = _case(B, n_max)
        t0 = time.perf_counter()
        fn(psi, dpa, dpv, p, a, V, DEFAULT_SCALES.g_recoil, 7 * math.pi / 12, omega, 0.0, h, steps)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n-max", type=int, default=10)
    ap.add_argument("--batches", type=int, nargs="+", default=[1, 16, 121])
    args = ap.parse_args(argv)
    print(f"active backend: {kernels.BACKEND}")
    if kernels.compiled_rk4_segment is None:
        print("compiled extension not built; only the numpy kernel is timed")
    print(f"{'batch':>6} {'numpy [ms]':>12} {'compiled [ms]':>14} {'speedup':>8}")
    for B in args.batches:
        t_py = best_time(kernels.python_rk4_segment, B, args.n_max, args.repeat)
        if kernels.compiled_rk4_segment is None:
            print(f"{B:>6} {1e3 * t_py:>12.2f} {'-':>14} {'-':>8}")
            continue
        t_c = best_time(kernels.compiled_rk4_segment, B, args.n_max, args.repeat)
        print(f"{B:>6} {1e3 * t_py:>12.2f} {1e3 * t_c:>14.2f} {t_py / t_c:>8.1f}")


if __name__ == "__main__":
    main()
