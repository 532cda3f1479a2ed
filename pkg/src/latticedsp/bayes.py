"""Likelihood tables over (a, V_L), simulated records and grid posteriors.

Posteriors live in log space so records of 1e5 outcomes do not underflow.
Accelerations are in g and lattice depths in E_R throughout.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .dynamics import STEPS_PER_SEGMENT, ControlProtocol, EstimationPoint, propagate_grid_states
from .physcore import DEFAULT_SCALES, PhysicalScales, build_basis

CACHE_VERSION = 1


class DegeneratePosteriorError(ValueError):
    """The record has zero likelihood at every grid point."""


@dataclass(frozen=True)
class LikelihoodGrid:
    a_axis: np.ndarray
    V_axis: np.ndarray
    table: np.ndarray  # (len(a_axis), len(V_axis), comb dimension)
    momenta: np.ndarray
    key: str = ""

    @property
    def shape(self) -> tuple:
        return self.table.shape[:2]

    def index_of(self, point: EstimationPoint) -> tuple:
        """Grid indices of an on-grid point; off-grid points are an error."""
        return _axis_index(self.a_axis, point.a, "a"), _axis_index(self.V_axis, point.V_L, "V_L")

    def distribution(self, point: EstimationPoint) -> np.ndarray:
        return self.table[self.index_of(point)]


def _axis_index(axis: np.ndarray, value: float, name: str) -> int:
    step = axis[1] - axis[0] if axis.size > 1 else 1.0
    i = int(np.argmin(np.abs(axis - value)))
    if abs(axis[i] - value) > 1e-9 * abs(step) + 1e-15:
        raise ValueError(f"{name}={value!r} is not on the grid axis; no interpolation is performed")
    return i


def uniform_axis(start: float, stop: float, count: int) -> np.ndarray:
    if count < 1:
        raise ValueError("axis needs at least one point")
    return np.linspace(start, stop, count)


def centered_axis(center: float, step: float, half_width: int) -> np.ndarray:
    """2*half_width+1 points at center + k*step; the center is reproduced exactly."""
    return center + step * np.arange(-half_width, half_width + 1)


def _check_axis(axis, name: str) -> np.ndarray:
    axis = np.asarray(axis, dtype=float).ravel()
    if axis.size == 0:
        raise ValueError(f"{name} axis is empty")
    if axis.size > 1:
        d = np.diff(axis)
        if np.any(d <= 0) or np.ptp(d) > 1e-9 * abs(d[0]):
            raise ValueError(f"{name} axis must be uniform and increasing")
    return axis


def grid_key(protocol: ControlProtocol, a_axis, V_axis, n_max: int, q: float, steps: int,
             g_recoil: float, prep_V) -> str:
    doc = {
        "version": CACHE_VERSION,
        "omega_s": repr(protocol.omega_s),
        "amps": [repr(x) for x in protocol.segment_amplitudes],
        "a": [repr(float(x)) for x in a_axis],
        "V": [repr(float(x)) for x in V_axis],
        "n_max": n_max, "q": repr(float(q)), "steps": steps,
        "g_recoil": repr(float(g_recoil)),
        "prep_V": None if prep_V is None else repr(float(prep_V)),
    }
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def default_cache_dir() -> Path:
    env = os.environ.get("LATTICEDSP_CACHE_DIR")
    return Path(env) if env else Path.home() / ".cache" / "latticedsp"


def default_workers() -> int:
    env = os.environ.get("LATTICEDSP_WORKERS")
    return max(1, int(env)) if env else (os.cpu_count() or 1)


def build_likelihood_grid(protocol: ControlProtocol, a_axis, V_axis, *, n_max: int = 10,
                          q: float = 0.0, steps_per_segment: int = STEPS_PER_SEGMENT,
                          prep_V: float | None = 10.0,
                          scales: PhysicalScales = DEFAULT_SCALES, cache_dir=None,
                          use_cache: bool = True, workers: int | None = None) -> LikelihoodGrid:
    """Final momentum distributions P(n | a, V_L) at every grid point.

    ``prep_V`` is the depth whose ground state every point starts from (the
    model in which the augmented derivatives start at zero); pass None to load
    each point into the ground state of its own depth.  Tables are cached as
    .npz files with a JSON header, keyed by a hash of everything that enters
    the propagation.
    """
    a_axis = _check_axis(a_axis, "a")
    V_axis = _check_axis(V_axis, "V_L")
    if np.any(V_axis < 0):
        raise ValueError("lattice depths must be non-negative")
    basis = build_basis(n_max, q)
    key = grid_key(protocol, a_axis, V_axis, n_max, q, steps_per_segment, scales.g_recoil, prep_V)
    cache = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    npz, header = cache / f"lik_{key[:24]}.npz", cache / f"lik_{key[:24]}.json"
    if use_cache and npz.exists() and header.exists():
        if json.loads(header.read_text()).get("key") == key:
            with np.load(npz) as data:
                return LikelihoodGrid(data["a_axis"], data["V_axis"], data["table"], data["momenta"], key)

    A, V = np.meshgrid(a_axis, V_axis, indexing="ij")
    a_flat, V_flat = A.ravel(), V.ravel()
    dt = protocol.segment_duration / steps_per_segment
    workers = default_workers() if workers is None else max(1, workers)
    # fixed chunking keeps the result independent of the worker count
    chunks = np.array_split(np.arange(a_flat.size), max(1, min(a_flat.size, 8 * workers)))

    def run(idx):
        psi, *_ = propagate_grid_states(basis, a_flat[idx], V_flat[idx], protocol, dt,
                                        scales.g_recoil, prep_V=prep_V)
        return idx, np.abs(psi) ** 2

    table = np.empty((a_flat.size, basis.dim))
    if workers == 1:
        results = map(run, chunks)
    else:
        pool = ThreadPoolExecutor(workers)
        results = pool.map(run, chunks)
    for idx, prob in results:
        table[idx] = prob
    if workers != 1:
        pool.shutdown()
    table /= table.sum(axis=1, keepdims=True)
    table = table.reshape(a_axis.size, V_axis.size, basis.dim)
    grid = LikelihoodGrid(a_axis, V_axis, table, basis.momenta.copy(), key)
    if use_cache:
        cache.mkdir(parents=True, exist_ok=True)
        np.savez(npz, a_axis=a_axis, V_axis=V_axis, table=table, momenta=grid.momenta)
        header.write_text(json.dumps({
            "key": key, "amplitudes": [repr(x) for x in protocol.segment_amplitudes],
            "omega_s": repr(protocol.omega_s), "a_axis": [a_axis[0], a_axis[-1], a_axis.size],
            "V_axis": [V_axis[0], V_axis[-1], V_axis.size], "n_max": n_max, "q": q,
            "steps_per_segment": steps_per_segment, "prep_V": prep_V,
        }, indent=1))
    return grid


@dataclass(frozen=True)
class MeasurementRecord:
    outcomes: np.ndarray  # comb indices
    truth: EstimationPoint
    seed: int

    @property
    def N(self) -> int:
        return int(self.outcomes.size)

    def counts(self, dim: int) -> np.ndarray:
        return np.bincount(self.outcomes, minlength=dim)


def sample_record(grid: LikelihoodGrid, truth: EstimationPoint, N: int, seed: int) -> MeasurementRecord:
    if N < 1:
        raise ValueError("N must be >= 1")
    p = grid.distribution(truth)
    rng = np.random.default_rng(seed)
    return MeasurementRecord(rng.choice(p.size, size=N, p=p), truth, seed)


@dataclass(frozen=True)
class PosteriorGrid:
    log_density: np.ndarray
    a_axis: np.ndarray
    V_axis: np.ndarray
    n_obs: int = 0

    @property
    def density(self) -> np.ndarray:
        return np.exp(self.log_density - logsumexp(self.log_density))


def flat_prior(grid: LikelihoodGrid) -> PosteriorGrid:
    na, nv = grid.shape
    return PosteriorGrid(np.full((na, nv), -math.log(na * nv)), grid.a_axis, grid.V_axis)


def log_likelihood(grid: LikelihoodGrid, counts: np.ndarray) -> np.ndarray:
    """sum_n counts_n log P(n | a, V_L); impossible outcomes give -inf."""
    nz = np.flatnonzero(counts)
    with np.errstate(divide="ignore"):
        logp = np.log(grid.table[..., nz])
    return logp @ counts[nz].astype(float)


def update_posterior(prior: PosteriorGrid, record, grid: LikelihoodGrid) -> PosteriorGrid:
    """Add the log-likelihood of ``record`` (a MeasurementRecord or outcome indices) and renormalize."""
    if prior.log_density.shape != grid.shape:
        raise ValueError("prior and likelihood grid shapes differ")
    outcomes = record.outcomes if isinstance(record, MeasurementRecord) else np.asarray(record, dtype=int)
    counts = np.bincount(outcomes, minlength=grid.table.shape[-1])
    log_post = prior.log_density + log_likelihood(grid, counts)
    if not np.any(np.isfinite(log_post)):
        raise DegeneratePosteriorError("record is impossible at every grid point")
    log_post = log_post - logsumexp(log_post)
    return PosteriorGrid(log_post, grid.a_axis, grid.V_axis, prior.n_obs + outcomes.size)


def mle(posterior: PosteriorGrid) -> EstimationPoint:
    """Grid argmax; ties go to the smallest (i, j) in lexicographic order."""
    i, j = np.unravel_index(int(np.argmax(posterior.log_density)), posterior.log_density.shape)
    return EstimationPoint(float(posterior.a_axis[i]), float(posterior.V_axis[j]))


@dataclass(frozen=True)
class PosteriorMoments:
    mean: np.ndarray  # (a, V_L)
    cov: np.ndarray

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))

    @property
    def correlation(self) -> float:
        sa, sv = self.std
        return float(self.cov[0, 1] / (sa * sv)) if sa > 0 and sv > 0 else math.nan


def posterior_moments(posterior: PosteriorGrid) -> PosteriorMoments:
    w = posterior.density
    A, V = np.meshgrid(posterior.a_axis, posterior.V_axis, indexing="ij")
    mean = np.array([np.sum(w * A), np.sum(w * V)])
    da, dv = A - mean[0], V - mean[1]
    caa, cvv, cav = np.sum(w * da * da), np.sum(w * dv * dv), np.sum(w * da * dv)
    return PosteriorMoments(mean, np.array([[caa, cav], [cav, cvv]]))


def write_posterior_csv(posterior: PosteriorGrid, path, comment: str | None = None) -> Path:
    """Columns a_g, V_L_ER, density; an optional leading '#' comment line."""
    path = Path(path)
    A, V = np.meshgrid(posterior.a_axis, posterior.V_axis, indexing="ij")
    rows = np.column_stack([A.ravel(), V.ravel(), posterior.density.ravel()])
    header = "a_g,V_L_ER,density"
    if comment:
        header = f"# {comment}\n{header}"
    np.savetxt(path, rows, delimiter=",", header=header, comments="", fmt="%.17g")
    return path
