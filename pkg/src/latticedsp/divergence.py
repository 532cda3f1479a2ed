"""Kullback-Leibler and Jensen-Shannon divergences in bits, JSD maps and curvature fits.

Near coincident parameters the JSD (in nats) behaves as I_{mu nu} db db / 8,
so in bits the CFIM is recovered as 8 ln 2 times the fitted quadratic form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bayes import LikelihoodGrid, _axis_index
from .dynamics import EstimationPoint
from .physcore import DEFAULT_SCALES, PhysicalScales

LN2 = math.log(2.0)
SLICE_KINDS = ("aa", "VV", "aV")


def kl(P, Q) -> float:
    """-sum P log2(Q/P); terms with P = 0 vanish, Q = 0 < P gives inf."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if P.shape != Q.shape:
        raise ValueError("distributions must share a support")
    m = P > 0
    if np.any(Q[m] <= 0):
        return math.inf
    return float(np.sum(P[m] * np.log2(P[m] / Q[m])))


def jsd(P, Q) -> float:
    """Jensen-Shannon divergence through the mixture M = (P + Q)/2; lies in [0, 1] bit."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    M = 0.5 * (P + Q)
    return max(0.0, 0.5 * (kl(P, M) + kl(Q, M)))


def jsd_rows(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Vectorized JSD over the last axis with broadcasting."""
    P, Q = np.broadcast_arrays(np.asarray(P, dtype=float), np.asarray(Q, dtype=float))
    M = 0.5 * (P + Q)
    with np.errstate(divide="ignore", invalid="ignore"):
        tp = np.where(P > 0, P * np.log2(P / M), 0.0)
        tq = np.where(Q > 0, Q * np.log2(Q / M), 0.0)
    return np.maximum(0.5 * (tp.sum(-1) + tq.sum(-1)), 0.0)


@dataclass(frozen=True)
class JsdMap:
    kind: str
    x_axis: np.ndarray
    y_axis: np.ndarray
    values: np.ndarray  # (len(x_axis), len(y_axis)) in bits
    x_role: str
    y_role: str
    fixed: dict = field(default_factory=dict)

    def to_csv(self, path, comment: str | None = None) -> Path:
        path = Path(path)
        X, Y = np.meshgrid(self.x_axis, self.y_axis, indexing="ij")
        lines = []
        if comment:
            lines.append(f"# {comment}")
        fixed = " ".join(f"{k}={v!r}" for k, v in self.fixed.items())
        lines.append(f"# slice={self.kind} {fixed}".rstrip())
        lines.append(f"{self.x_role},{self.y_role},jsd_bits")
        lines += [f"{x!r},{y!r},{v!r}" for x, y, v in
                  zip(X.ravel().tolist(), Y.ravel().tolist(), self.values.ravel().tolist())]
        path.write_text("\n".join(lines) + "\n")
        return path


def jsd_map(grid: LikelihoodGrid, kind: str, *, V_L: float | None = None, a: float | None = None,
            reference: EstimationPoint | None = None) -> JsdMap:
    """Pairwise JSD over one slice of a likelihood grid.

    ``aa``: D(P(a, V_L) || P(a', V_L)) at fixed V_L; ``VV``: the same over
    depths at fixed a; ``aV``: D(P(a, V_L) || P(reference)) over the full grid.
    """
    if kind == "aa":
        if V_L is None:
            raise ValueError("the aa slice needs a fixed V_L")
        j = _axis_index(grid.V_axis, V_L, "V_L")
        rows = grid.table[:, j]
        vals = jsd_rows(rows[:, None, :], rows[None, :, :])
        return JsdMap(kind, grid.a_axis, grid.a_axis, vals, "a_g", "a_prime_g", {"V_L": float(V_L)})
    if kind == "VV":
        if a is None:
            raise ValueError("the VV slice needs a fixed a")
        i = _axis_index(grid.a_axis, a, "a")
        rows = grid.table[i]
        vals = jsd_rows(rows[:, None, :], rows[None, :, :])
        return JsdMap(kind, grid.V_axis, grid.V_axis, vals, "V_L_ER", "V_L_prime_ER", {"a": float(a)})
    if kind == "aV":
        if reference is None:
            raise ValueError("the aV slice needs a reference point")
        ref = grid.distribution(reference)
        vals = jsd_rows(grid.table, ref)
        return JsdMap(kind, grid.a_axis, grid.V_axis, vals, "a_g", "V_L_ER",
                      {"a_ref": reference.a, "V_ref": reference.V_L})
    raise ValueError(f"slice kind must be one of {SLICE_KINDS}")


@dataclass(frozen=True)
class CurvatureFit:
    info: np.ndarray  # 8 ln2 x fitted quadratic form, comparable to the CFIM
    gradient: np.ndarray  # linear coefficients (bits per parameter unit)
    offset: float
    residual: float  # rms misfit in bits
    scale: float  # rms of the fitted values, for judging the residual


def fit_quadratic(da: np.ndarray, dV: np.ndarray, values: np.ndarray, order: int = 2) -> CurvatureFit:
    """Least-squares c + g.d + d^T Q d over scattered offsets d = (da, dV).

    ``order`` > 2 adds every monomial up to that total degree, so the
    quadratic coefficients are not biased by higher Taylor terms when the
    stencil is wide.  A 5x5 stencil supports ``order=4``.
    """
    if order < 2:
        raise ValueError("order must be at least 2")
    da, dV, values = (np.asarray(x, dtype=float).ravel() for x in (da, dV, values))
    sa = np.max(np.abs(da)) or 1.0
    sv = np.max(np.abs(dV)) or 1.0
    x, y = da / sa, dV / sv
    cols = [np.ones_like(x), x, y, x * x, y * y, 2.0 * x * y]
    cols += [x**k * y**(d - k) for d in range(3, order + 1) for k in range(d + 1)]
    X = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(X, values, rcond=None)
    resid = values - X @ coef
    c, gx, gy, qxx, qyy, qxy = coef[:6]
    Q = np.array([[qxx / sa**2, qxy / (sa * sv)], [qxy / (sa * sv), qyy / sv**2]])
    return CurvatureFit(8.0 * LN2 * Q, np.array([gx / sa, gy / sv]), float(c),
                        float(np.sqrt(np.mean(resid**2))), float(np.sqrt(np.mean(values**2))))


def curvature_check(grid: LikelihoodGrid, reference: EstimationPoint, half_width: int = 2,
                    order: int = 4) -> CurvatureFit:
    """Local fit of D(P(b) || P(reference)) over the (2w+1)^2 neighbourhood of the reference.

    The fit includes terms up to ``order`` (reduced to 2w if the stencil
    cannot support it); only the quadratic form is reported.
    """
    i, j = grid.index_of(reference)
    na, nv = grid.shape
    w = half_width
    if i < w or j < w or i + w >= na or j + w >= nv:
        raise ValueError("reference point must lie at least "
                         f"{w} cells inside the grid for the {2 * w + 1}x{2 * w + 1} stencil")
    sub = grid.table[i - w:i + w + 1, j - w:j + w + 1]
    vals = jsd_rows(sub, grid.table[i, j])
    da = grid.a_axis[i - w:i + w + 1] - grid.a_axis[i]
    dV = grid.V_axis[j - w:j + w + 1] - grid.V_axis[j]
    DA, DV = np.meshgrid(da, dV, indexing="ij")
    return fit_quadratic(DA, DV, vals, order=max(2, min(order, 2 * w)))


@dataclass(frozen=True)
class EffectiveRange:
    a_mid: np.ndarray  # midpoints of adjacent grid pairs
    profile: np.ndarray  # local information 8 ln2 JSD / da^2
    envelope: np.ndarray
    reference_info: float
    lower: float | None  # boundary below the reference, None if not reached
    upper: float | None
    a0: float | None  # phase-wrap acceleration in g


def local_information_profile(a_axis: np.ndarray, dists: np.ndarray):
    """Information along a 1-D slice from the JSD between neighbouring points."""
    a_axis = np.asarray(a_axis, dtype=float)
    d = jsd_rows(dists[:-1], dists[1:])
    step = np.diff(a_axis)
    return 0.5 * (a_axis[:-1] + a_axis[1:]), 8.0 * LN2 * d / step**2


def effective_range(a_axis, dists, reference: float = 0.0, fraction: float = 0.5,
                    T_total: float | None = None,
                    scales: PhysicalScales = DEFAULT_SCALES) -> EffectiveRange:
    """Where the envelope of the local information first drops below ``fraction`` of its value at the reference.

    The envelope at distance r from the reference is the largest profile value
    at any distance >= r on the same side, so a boundary is the point beyond
    which the information never recovers.  ``T_total`` (1/omega_R) adds the
    phase-wrap constant a0 for comparison.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    a_mid, prof = local_information_profile(a_axis, np.asarray(dists, dtype=float))
    k0 = int(np.argmin(np.abs(a_mid - reference)))
    ref_info = float(prof[k0])
    env = np.empty_like(prof)
    up = prof[k0:]
    env[k0:] = np.maximum.accumulate(up[::-1])[::-1]
    down = prof[:k0 + 1]
    env[:k0 + 1] = np.maximum.accumulate(down)
    thresh = fraction * ref_info
    upper = lower = None
    above = np.flatnonzero(env[k0:] < thresh)
    if above.size:
        upper = float(a_mid[k0 + above[0]])
    below = np.flatnonzero(env[:k0 + 1][::-1] < thresh)
    if below.size:
        lower = float(a_mid[k0 - below[0]])
    a0 = scales.phase_wrap_acceleration(T_total) if T_total is not None else None
    return EffectiveRange(a_mid, prof, env, ref_info, lower, upper, a0)
