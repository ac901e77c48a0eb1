"""Exact event-driven simulation of the scaled background/molecule pair.

Between events the total rate ``N^alpha q_J + N lam_J + mu M`` is constant,
so exponential holding times plus a categorical event choice sample the
process without discretisation error.  The inner loop lives in a compiled
kernel (see :mod:`mmisq._backend`).
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _backend, limits
from .ctmc import DeviationMatrix
from .curves import CurveTable
from .errors import EventOverflow, InsufficientPaths, InvalidHorizon, SpecMismatch
from .model import ModelSpec, ScalingSpec
from .stats import MomentAccumulator, jackknife_mean_se

__all__ = [
    "PathSample",
    "EnsembleStats",
    "derive_seed",
    "make_grid",
    "simulate_path",
    "simulate_paths",
    "u_process",
    "replicate",
    "summarize",
    "martingale_values",
    "martingale_drift_check",
    "DEFAULT_EVENT_CAP",
]

DEFAULT_EVENT_CAP = 10**9
PARTITION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PathSample:
    """One trajectory sampled on a time grid.

    ``j_path`` holds 0-based background states.  ``transitions[i, j]`` counts
    background jumps ``i -> j`` over the whole horizon.
    """

    grid: np.ndarray
    j_path: np.ndarray
    m_path: np.ndarray
    z_path: np.ndarray
    arrivals: int
    departures: int
    background_jumps: int
    transitions: np.ndarray
    seed: int
    horizon: float
    scale: ScalingSpec
    m0: int

    @property
    def event_counts(self) -> dict:
        return {
            "arrivals": self.arrivals,
            "departures": self.departures,
            "background": self.background_jumps,
        }

    def same_as(self, other: "PathSample") -> bool:
        return (
            np.array_equal(self.grid, other.grid)
            and np.array_equal(self.j_path, other.j_path)
            and np.array_equal(self.m_path, other.m_path)
            and np.array_equal(self.z_path, other.z_path)
            and np.array_equal(self.transitions, other.transitions)
            and self.event_counts == other.event_counts
        )


@dataclass(frozen=True, eq=False)
class EnsembleStats:
    """Monte Carlo summary of ``U^N_beta`` on a grid.

    ``mgf`` maps each theta to ``(estimate, jackknife_se)`` arrays.
    ``samples`` keeps the raw ``(R, G)`` matrix of U values in replication
    order for downstream checks.
    """

    grid: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    se_mean: np.ndarray
    se_var: np.ndarray
    mgf: dict
    R: int
    samples: np.ndarray = field(repr=False)


def derive_seed(base_seed: int, r: int) -> int:
    """64-bit seed for replication ``r``, mixed from ``(base_seed, r)`` with no sequential state."""
    ss = np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(r),))
    return int(ss.generate_state(1, np.uint64)[0])


def make_grid(T: float, step: float) -> np.ndarray:
    """Uniform grid ``0, step, 2 step, ...`` up to and including ``T`` when it lands on it."""
    n = int(np.floor(T / step + 1e-9))
    grid = np.arange(n + 1) * step
    if T - grid[-1] > 1e-12 * max(1.0, T):
        grid = np.append(grid, T)
    else:
        grid[-1] = T
    return grid


def _check_grid(grid, T):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-d array")
    if grid[0] != 0.0:
        raise ValueError("grid must start at t = 0")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    if grid[-1] > T:
        raise ValueError(f"grid extends past the horizon T = {T}")
    return np.ascontiguousarray(grid)


def _check_path(path: PathSample):
    if np.any(path.m_path < 0):
        raise RuntimeError("negative molecule count on simulated path")
    gap = np.abs(path.z_path.sum(axis=1) - path.grid)
    if np.any(gap > PARTITION_TOL * np.maximum(1.0, path.grid)):
        raise RuntimeError("occupation times do not partition the elapsed time")
    if np.any(np.diff(path.z_path, axis=0) < 0):
        raise RuntimeError("occupation times decreased")


def simulate_path(model: ModelSpec, scale: ScalingSpec, T: float, grid, seed: int,
                  event_cap: int = DEFAULT_EVENT_CAP, backend=None) -> PathSample:
    """Simulate one trajectory of ``(J^N, M^N, Z^N)`` on ``[0, T]``.

    The background state starts from its stationary law and the molecule
    count from ``round(N * rho0)``.  Output is a deterministic function of
    the arguments; both kernel backends give identical paths.

    Parameters
    ----------
    model, scale : ModelSpec, ScalingSpec
    T : float
        Horizon, > 0.
    grid : array_like
        Sample times; must start at 0, increase strictly and stay within T.
    seed : int
        Seed of the PCG64 stream used for this path.
    event_cap : int
        Abort with :class:`EventOverflow` beyond this many events.
    backend : str, optional
        ``"cython"`` or ``"python"``; defaults to the import-time choice.

    Raises
    ------
    InvalidHorizon, EventOverflow
    """
    if not (T > 0 and np.isfinite(T)):
        raise InvalidHorizon(f"horizon must be positive and finite, got {T}")
    grid = _check_grid(grid, T)
    kern = _backend.kernels if backend is None else _backend.load(backend)[1]

    d = model.d
    speed = scale.background_speed
    Q = model.G.rates
    offdiag = np.ascontiguousarray(Q * speed)
    np.fill_diagonal(offdiag, 0.0)
    exit_rates = np.ascontiguousarray(offdiag.sum(axis=1))
    arr_rates = np.ascontiguousarray(model.lam * scale.N)

    bitgen = np.random.PCG64(int(seed))
    u0 = np.random.Generator(bitgen).random()
    j0 = min(int(np.searchsorted(np.cumsum(model.pi), u0, side="right")), d - 1)
    m0 = model.initial_count(scale.N)

    G = grid.size
    j_out = np.empty(G, dtype=np.int64)
    m_out = np.empty(G, dtype=np.int64)
    z_out = np.empty((G, d))
    counts = np.zeros(3, dtype=np.int64)
    trans = np.zeros((d, d), dtype=np.int64)
    status = kern.simulate_path(bitgen, offdiag, exit_rates, arr_rates, model.mu, m0, j0,
                                float(T), grid, int(event_cap), j_out, m_out, z_out, counts, trans)
    if status != 0:
        raise EventOverflow(f"path exceeded the event cap of {event_cap}")
    path = PathSample(grid, j_out, m_out, z_out, int(counts[0]), int(counts[1]), int(counts[2]),
                      trans, int(seed), float(T), scale, m0)
    _check_path(path)
    return path


def _path_chunk(args):
    model, scale, T, grid, seeds, event_cap, backend = args
    return [simulate_path(model, scale, T, grid, s, event_cap, backend) for s in seeds]


def _chunks(seq, n):
    size = max(1, -(-len(seq) // n))
    return [seq[i:i + size] for i in range(0, len(seq), size)]


def simulate_paths(model: ModelSpec, scale: ScalingSpec, T: float, grid, R: int,
                   base_seed: int = 0, jobs: int = 1, seeds=None,
                   event_cap: int = DEFAULT_EVENT_CAP, backend=None) -> list[PathSample]:
    """Simulate ``R`` independent paths, returned in replication order.

    Replication ``r`` uses :func:`derive_seed` ``(base_seed, r)`` unless
    ``seeds`` is given.  With ``jobs > 1`` chunks run in worker processes;
    the result does not depend on ``jobs``.
    """
    if seeds is None:
        seeds = [derive_seed(base_seed, r) for r in range(R)]
    else:
        seeds = [int(s) for s in seeds]
        if len(seeds) != R:
            raise ValueError(f"got {len(seeds)} seeds for {R} replications")
    grid = _check_grid(grid, T)
    if jobs is None or jobs <= 1 or R < 2:
        return _path_chunk((model, scale, T, grid, seeds, event_cap, backend))
    tasks = [(model, scale, T, grid, c, event_cap, backend) for c in _chunks(seeds, 4 * jobs)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_path_chunk, tasks))
    return [p for part in parts for p in part]


def _u_values(m_path, grid, model: ModelSpec, scale: ScalingSpec):
    rho = np.asarray(limits.fluid_limit(model, grid))
    return (m_path - scale.N * rho) / scale.divisor


def u_process(path: PathSample, model: ModelSpec, scale: ScalingSpec) -> CurveTable:
    """Centred and scaled count ``U = (M - N rho(t)) / N^(1-beta)`` on the path grid."""
    if path.scale != scale:
        raise SpecMismatch(f"path was simulated under {path.scale}, not {scale}")
    if path.z_path.shape[1] != model.d or path.m0 != model.initial_count(scale.N):
        raise SpecMismatch("path does not match the model")
    return CurveTable(path.grid, _u_values(path.m_path, path.grid, model, scale), name="u")


def replicate(model: ModelSpec, scale: ScalingSpec, T: float, grid, R: int,
              theta_list=(), base_seed: int = 0, jobs: int = 1, seeds=None,
              event_cap: int = DEFAULT_EVENT_CAP, backend=None) -> EnsembleStats:
    """Monte Carlo moments and MGF estimates of ``U^N_beta`` over ``R`` replications."""
    if R < 2:
        raise InsufficientPaths(f"need at least 2 replications, got {R}")
    paths = simulate_paths(model, scale, T, grid, R, base_seed, jobs, seeds, event_cap, backend)
    return summarize(paths, model, scale, theta_list)


def summarize(paths, model: ModelSpec, scale: ScalingSpec, theta_list=()) -> EnsembleStats:
    grid = paths[0].grid
    samples = np.array([_u_values(p.m_path, grid, model, scale) for p in paths])
    acc = MomentAccumulator(grid.shape)
    acc.extend(samples)
    mgf = {}
    for theta in theta_list:
        e = np.exp(float(theta) * samples)
        macc = MomentAccumulator(grid.shape)
        macc.extend(e)
        mgf[float(theta)] = (macc.mean, jackknife_mean_se(e))
    return EnsembleStats(grid, acc.mean, acc.variance, acc.se_mean, acc.se_variance, mgf,
                         len(paths), samples)



def martingale_values(paths, dev: DeviationMatrix, scale: ScalingSpec, pi) -> np.ndarray:
    """``V = N^{-alpha/2} (X(t) - X(0))^T D + N^{alpha/2} (Z(t) - pi t)`` per path, shape ``(R, G, d)``."""
    pi = np.asarray(pi, dtype=float)
    d = pi.size
    half = scale.background_speed ** 0.5
    eye = np.eye(d)
    out = []
    for p in paths:
        xt = eye[p.j_path] - eye[p.j_path[0]]
        out.append(xt @ dev.D / half + half * (p.z_path - np.outer(p.grid, pi)))
    return np.array(out)


def martingale_drift_check(paths, dev: DeviationMatrix, scale: ScalingSpec, pi,
                           min_paths: int = 1000):
    """Sample mean and standard error of each component of V at each grid time.

    Returns ``(mean, se)`` arrays of shape ``(G, d)``.  For a martingale
    started at zero the mean vanishes at every time.
    """
    if len(paths) < min_paths:
        raise InsufficientPaths(f"need at least {min_paths} paths, got {len(paths)}")
    v = martingale_values(paths, dev, scale, pi)
    acc = MomentAccumulator(v.shape[1:])
    acc.extend(v)
    return acc.mean, acc.se_mean

