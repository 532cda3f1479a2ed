"""Backend selection for the RK4 kernel.

The compiled extension is used when importable; otherwise, or when the
environment variable LATTICEDSP_BACKEND is set to ``python``, the numpy
implementation is used.  Both share one signature, see ``_rk4_py.rk4_segment``.
"""
import os

from . import _rk4_py

python_rk4_segment = _rk4_py.rk4_segment

try:
    from ._rk4 import rk4_segment as compiled_rk4_segment
except ImportError:  # extension not built
    compiled_rk4_segment = None

if compiled_rk4_segment is not None and os.environ.get("LATTICEDSP_BACKEND", "").lower() != "python":
    rk4_segment = compiled_rk4_segment
    BACKEND = "cython"
else:
    rk4_segment = python_rk4_segment
    BACKEND = "python"
