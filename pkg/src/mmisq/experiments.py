"""Orchestrated studies: the two-state MGF convergence sweep and CLT checks by simulation.

Every study is a deterministic function of its arguments (including
``base_seed``) and writes plain CSV/JSON so that reruns can be diffed
byte for byte.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats as sps

from . import __version__, ctmc, limits, mgf_ode
from .curves import fmt, write_csv
from .errors import DegenerateInput, InsufficientPaths
from .model import ModelSpec, ScalingSpec, example_model
from .simulator import simulate_paths, summarize
from .stats import MomentAccumulator, kurtosis_se, skewness_se

__all__ = [
    "DEFAULT_N_SWEEP",
    "DEFAULT_ALPHAS",
    "DEFAULT_THRESHOLDS",
    "SweepResult",
    "Check",
    "rate_fit",
    "convergence_sweep",
    "reproduce_example",
    "verify_z_clt",
    "verify_u_clt",
    "write_json",
    "default_jobs",
    "analyze",
]

DEFAULT_N_SWEEP = (4, 16, 64, 256, 1024)
DEFAULT_ALPHAS = (0.5, 1.0, 1.5)
DEFAULT_THETA = 0.5

DEFAULT_THRESHOLDS = {
    # statistical band in standard errors
    "se_multiplier": 3.0,
    # relative floor on the U-variance band: pass if within max(k SE, rel * target)
    "u_var_rel_floor": 0.03,
    # relative band on the occupation-time variance
    "z_var_rel_tol": 0.05,
    # minimal |slope| / SE for the log-log fit
    "slope_t_min": 3.0,
}


def default_jobs() -> int:
    return os.cpu_count() or 1


def _thresholds(overrides):
    th = dict(DEFAULT_THRESHOLDS)
    if overrides:
        unknown = set(overrides) - set(th)
        if unknown:
            raise KeyError(f"unknown thresholds: {sorted(unknown)}")
        th.update({k: float(v) for k, v in overrides.items()})
    return th


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    return x


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float | None = None
    target: float | None = None
    tolerance: float | None = None
    detail: str = ""

    def as_dict(self):
        return {k: v for k, v in self.__dict__.items() if v is not None and v != ""}


@dataclass(frozen=True, eq=False)
class SweepResult:
    alpha: float
    theta: float
    N: np.ndarray
    error: np.ndarray
    slope: float
    slope_se: float

    def __post_init__(self):
        if np.any(np.diff(self.N) <= 0):
            raise ValueError("N must be strictly increasing")
        if np.any(self.error <= 0):
            raise ValueError("errors must be positive")


def rate_fit(rows):
    """Least-squares slope of ``log(error)`` on ``log(N)`` and its standard error.

    Parameters
    ----------
    rows : iterable of (N, error)
        At least three rows, all positive, with at least two distinct N.
    """
    rows = np.asarray(list(rows), dtype=float)
    if rows.ndim != 2 or rows.shape[0] < 3:
        raise DegenerateInput("need at least three (N, error) rows")
    if np.any(rows <= 0):
        raise DegenerateInput("N and error must be positive")
    x, y = np.log(rows[:, 0]), np.log(rows[:, 1])
    if np.ptp(x) == 0:
        raise DegenerateInput("all N are equal")
    fit = sps.linregress(x, y)
    return float(fit.slope), float(fit.stderr)


def _label(x) -> str:
    return format(float(x), "g")


def convergence_sweep(model: ModelSpec, alpha: float, N_list, theta: float, grid=None, **kw):
    """Return ``(SweepResult, curves)`` where ``curves`` maps N to its :class:`MgfCurve`."""
    if grid is None:
        grid = mgf_ode.sup_grid(model)
    N_list = sorted(int(n) for n in N_list)
    curves = {n: mgf_ode.mgf_u_curve(model, n, alpha, theta, grid, **kw) for n in N_list}
    limit = np.asarray(limits.limit_mgf(model, alpha, grid, theta))
    errors = np.array([mgf_ode.sup_abs_gap(curves[n].values, limit) for n in N_list])
    slope, se = rate_fit(zip(N_list, errors))
    return SweepResult(float(alpha), float(theta), np.array(N_list), errors, slope, se), curves


def _sweep_checks(sweeps, th):
    checks = []
    by_alpha = {s.alpha: s for s in sweeps}
    for s in sweeps:
        checks.append(Check(f"sup_error_decreasing_alpha_{_label(s.alpha)}",
                            bool(np.all(np.diff(s.error) < 0)),
                            detail=" > ".join(fmt(e) for e in s.error)))
        if s.alpha >= 1:
            t = np.inf if s.slope_se == 0 else abs(s.slope) / s.slope_se
            checks.append(Check(f"loglog_slope_alpha_{_label(s.alpha)}",
                                bool(s.slope < 0 and t > th["slope_t_min"]),
                                value=s.slope, tolerance=s.slope_se,
                                detail=f"|slope|/SE = {fmt(t)}"))
    if 0.5 in by_alpha and 1.5 in by_alpha:
        lo, hi = by_alpha[0.5], by_alpha[1.5]
        common = sorted(set(lo.N.tolist()) & set(hi.N.tolist()))
        if common:
            n = common[-1]
            e_lo = float(lo.error[lo.N.tolist().index(n)])
            e_hi = float(hi.error[hi.N.tolist().index(n)])
            checks.append(Check("sub_regime_slower_at_largest_N", e_lo > e_hi, value=e_lo, target=e_hi,
                                detail=f"N = {n}"))
    return checks


def reproduce_example(outdir, model: ModelSpec | None = None, alphas=DEFAULT_ALPHAS,
                      N_list=DEFAULT_N_SWEEP, theta: float = DEFAULT_THETA, base_seed: int = 0,
                      thresholds=None, config=None):
    """Write the MGF convergence study for the two-state example.

    Output files under ``outdir``:

    * ``mgf_alpha_<a>_N_<n>.csv`` with ``t,lambda_N,lambda_limit,abs_err``
    * ``limit_alpha_<a>.csv`` with ``t,value``
    * ``sup_error.csv`` with ``alpha,N,sup_error``
    * ``rate_fit.csv`` with ``alpha,theta,slope,slope_se``
    * ``config.json`` and ``report.json``

    Returns the report dictionary.
    """
    out = Path(outdir)
    model = example_model() if model is None else model
    th = _thresholds(thresholds)
    grid = mgf_ode.sup_grid(model)
    sweeps = []
    for a in alphas:
        sweep, curves = convergence_sweep(model, a, N_list, theta, grid)
        sweeps.append(sweep)
        limit = np.asarray(limits.limit_mgf(model, a, grid, theta))
        write_csv(out / f"limit_alpha_{_label(a)}.csv", ["t", "value"], [grid, limit])
        for n, c in curves.items():
            write_csv(out / f"mgf_alpha_{_label(a)}_N_{n}.csv",
                      ["t", "lambda_N", "lambda_limit", "abs_err"],
                      [grid, c.values, limit, np.abs(c.values - limit)])
    write_csv(out / "sup_error.csv", ["alpha", "N", "sup_error"],
              [np.repeat([s.alpha for s in sweeps], [s.N.size for s in sweeps]),
               np.concatenate([s.N for s in sweeps]),
               np.concatenate([s.error for s in sweeps])])
    write_csv(out / "rate_fit.csv", ["alpha", "theta", "slope", "slope_se"],
              [[s.alpha for s in sweeps], [s.theta for s in sweeps],
               [s.slope for s in sweeps], [s.slope_se for s in sweeps]])
    checks = _sweep_checks(sweeps, th)
    report = {"study": "reproduce", "passed": all(c.passed for c in checks),
              "checks": [c.as_dict() for c in checks]}
    resolved = config if config is not None else {
        "study": "reproduce", "alphas": list(alphas), "N_list": list(N_list), "theta": theta,
        "base_seed": base_seed, "thresholds": th}
    write_json(out / "config.json", {**resolved, "artifact_version": __version__})
    write_json(out / "report.json", report)
    return report


def _as_scaling(s) -> ScalingSpec:
    if isinstance(s, ScalingSpec):
        return s
    if isinstance(s, (tuple, list)):
        return ScalingSpec(*s)
    return ScalingSpec(int(s), 1.0)


def verify_z_clt(model: ModelSpec, scales, t: float, R: int, base_seed: int = 0,
                 jobs: int = 1, thresholds=None):
    """Compare the empirical covariance of ``N^{alpha/2} (Z(t) - pi t)`` with ``C t``.

    ``scales`` entries are :class:`ScalingSpec`, ``(N, alpha)`` pairs or a
    plain background speed ``N^alpha`` (taken as ``N`` with ``alpha = 1``).
    Arrivals are switched off: occupation times do not depend on them.
    """
    if R < 1000:
        raise InsufficientPaths(f"need at least 1000 replications, got {R}")
    th = _thresholds(thresholds)
    k = th["se_multiplier"]
    bg = ModelSpec(model.G, np.zeros(model.d), model.mu, 0.0, allow_zero_lambda=True)
    C = model.covariance.C
    results = []
    checks = []
    for s in map(_as_scaling, scales):
        paths = simulate_paths(bg, s, t, np.array([0.0, t]), R, base_seed, jobs)
        w = np.array([p.z_path[-1] for p in paths])
        w = np.sqrt(s.background_speed) * (w - model.pi * t)
        acc = MomentAccumulator(model.d)
        acc.extend(w)
        cov = np.cov(w, rowvar=False).reshape(model.d, model.d)
        wc = w - w.mean(axis=0)
        total = wc.sum(axis=1)
        row_se = np.array([np.std(wc[:, i] * total) / np.sqrt(R) for i in range(model.d)])
        row_sums = cov.sum(axis=1)
        target = C * t
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(np.abs(target) > 0, np.abs(cov - target) / np.abs(target), np.abs(cov))
        tag = f"speed_{_label(s.background_speed)}"
        res = {
            "N": s.N, "alpha": s.alpha, "background_speed": s.background_speed, "t": t, "R": R,
            "covariance": cov, "target": target, "relative_error": rel,
            "skewness": acc.skewness, "skewness_se": skewness_se(R),
            "excess_kurtosis": acc.excess_kurtosis, "kurtosis_se": kurtosis_se(R),
            "row_sums": row_sums, "row_sum_se": row_se,
        }
        results.append(res)
        if model.d == 1:
            checks.append(Check(f"z_identically_zero_{tag}", bool(np.all(np.abs(w) < 1e-9))))
            continue
        checks.append(Check(f"z_var_1_{tag}", bool(rel[0, 0] <= th["z_var_rel_tol"]),
                            value=cov[0, 0], target=target[0, 0], tolerance=th["z_var_rel_tol"]))
        checks.append(Check(f"z_skewness_1_{tag}", bool(abs(acc.skewness[0]) <= k * skewness_se(R)),
                            value=acc.skewness[0], target=0.0, tolerance=k * skewness_se(R)))
        checks.append(Check(f"z_row_sums_{tag}", bool(np.all(np.abs(row_sums) <= k * row_se + 1e-12)),
                            detail=" ".join(fmt(x) for x in row_sums)))
    return {"study": "z_clt", "passed": all(c.passed for c in checks),
            "results": results, "checks": [c.as_dict() for c in checks]}


def verify_u_clt(model: ModelSpec, alpha: float, N_list, t_list, R: int, base_seed: int = 0,
                 lag=None, jobs: int = 1, thresholds=None):
    """Check the mean, variance and one lag covariance of ``U^N_beta`` against the limit.

    ``lag`` is a ``(t, u)`` pair; the covariance of ``U(t)`` and ``U(t + u)``
    is compared with :func:`limits.u_limit_covariance`.  A statistic passes
    when it lies within ``max(k SE, rel * |target|)`` of its target (the
    relative floor applies to the variance and covariance only).
    """
    if R < 1000:
        raise InsufficientPaths(f"need at least 1000 replications, got {R}")
    th = _thresholds(thresholds)
    k, rel_floor = th["se_multiplier"], th["u_var_rel_floor"]
    times = {0.0, *map(float, t_list)}
    if lag is not None:
        times |= {float(lag[0]), float(lag[0]) + float(lag[1])}
    grid = np.array(sorted(times))
    T = float(grid[-1])
    results, checks = [], []
    for N in N_list:
        scale = ScalingSpec(int(N), alpha)
        paths = simulate_paths(model, scale, T, grid, R, base_seed, jobs)
        ens = summarize(paths, model, scale)
        offset = float(N) ** scale.beta * (model.initial_count(N) / N - model.rho0)
        for t in map(float, t_list):
            i = int(np.searchsorted(grid, t))
            target_var = limits.u_limit_variance(model, alpha, t)
            target_mean = offset * np.exp(-model.mu * t)
            var_tol = max(k * ens.se_var[i], rel_floor * abs(target_var))
            mean_tol = k * ens.se_mean[i]
            row = {"N": int(N), "t": t, "mean": ens.mean[i], "se_mean": ens.se_mean[i],
                   "target_mean": target_mean, "variance": ens.variance[i], "se_var": ens.se_var[i],
                   "target_variance": target_var}
            results.append(row)
            tag = f"N_{N}_t_{_label(t)}"
            checks.append(Check(f"u_var_{tag}", bool(abs(ens.variance[i] - target_var) <= var_tol),
                                value=ens.variance[i], target=target_var, tolerance=var_tol))
            checks.append(Check(f"u_mean_{tag}", bool(abs(ens.mean[i] - target_mean) <= mean_tol),
                                value=ens.mean[i], target=target_mean, tolerance=mean_tol))
        if lag is not None:
            t0, u = map(float, lag)
            i, j = int(np.searchsorted(grid, t0)), int(np.searchsorted(grid, t0 + u))
            a = ens.samples[:, i] - ens.samples[:, i].mean()
            b = ens.samples[:, j] - ens.samples[:, j].mean()
            prod = a * b
            cov = prod.sum() / (R - 1)
            se = prod.std(ddof=1) / np.sqrt(R)
            target = limits.u_limit_covariance(model, alpha, t0, u)
            tol = max(k * se, rel_floor * abs(target))
            checks.append(Check(f"u_lag_cov_N_{N}_t_{_label(t0)}_u_{_label(u)}",
                                bool(abs(cov - target) <= tol), value=cov, target=target, tolerance=tol))
    return {"study": "u_clt", "alpha": alpha, "passed": all(c.passed for c in checks),
            "results": results, "checks": [c.as_dict() for c in checks]}


def analyze(model: ModelSpec, alpha: float, grid):
    """Closed-form summary used by the ``analyze`` command."""
    regime = limits.classify(alpha)
    return {
        "pi": model.pi, "D": model.deviation.D, "C": model.covariance.C,
        "thorn": model.thorn, "lambda_inf": model.lam_inf,
        "regime": regime.kind.value, "beta": regime.beta,
        "spectral_gap": ctmc.spectral_gap(model.G),
        "curves": {
            "t": np.asarray(grid), "rho": np.atleast_1d(limits.fluid_limit(model, grid)),
            "u_variance": np.atleast_1d(limits.u_limit_variance(model, alpha, grid)),
        },
    }

