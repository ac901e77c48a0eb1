"""Command-line entry point: ``mmisq {analyze,simulate,mgf,converge,reproduce}``.

Exit codes: 0 success, 1 error, 2 a check in ``report.json`` failed.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, limits, mgf_ode
from .config import RunConfig, load_config, parse_config
from .curves import write_csv
from .errors import ConfigError, MmisqError
from .experiments import (
    Check,
    _jsonable,
    _label,
    _sweep_checks,
    _thresholds,
    analyze,
    convergence_sweep,
    default_jobs,
    reproduce_example,
    write_json,
)
from .simulator import derive_seed, make_grid, replicate, simulate_path

log = logging.getLogger("mmisq")

EXIT_OK, EXIT_ERROR, EXIT_CHECKS = 0, 1, 2
SEED_ENV = "MMISQ_SEED"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _apply_seed_env(cfg: RunConfig) -> RunConfig:
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            cfg.base_seed = int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV}: expected an integer, got {env!r}") from None
    return cfg


def _out_dir(args, cfg: RunConfig) -> Path:
    out = args.out or cfg.output
    if out is None:
        raise ConfigError("no output directory: pass --out or set 'output' in the config")
    return Path(out)


def _finish(out: Path, cfg: RunConfig, study: str, checks, extra=None) -> int:
    write_json(out / "config.json", {**cfg.resolved(), "artifact_version": __version__})
    report = {"study": study, "passed": all(c.passed for c in checks),
              "checks": [c.as_dict() for c in checks]}
    if extra:
        report.update(extra)
    write_json(out / "report.json", report)
    failed = [c.name for c in checks if not c.passed]
    for name in failed:
        log.warning("check failed: %s", name)
    return EXIT_CHECKS if failed else EXIT_OK


def cmd_analyze(cfg: RunConfig, out: Path | None) -> int:
    grid = make_grid(cfg.T, cfg.grid_step)
    summaries = {_label(a): analyze(cfg.model, a, grid) for a in cfg.alphas}
    first = next(iter(summaries.values()))
    body = {k: first[k] for k in ("pi", "D", "C", "thorn", "lambda_inf", "spectral_gap")}
    body["regimes"] = {a: {"regime": s["regime"], "beta": s["beta"]} for a, s in summaries.items()}
    print(json.dumps(_jsonable(body), indent=2, sort_keys=True))
    if out is not None:
        write_json(out / "analysis.json", body)
        for a, s in summaries.items():
            c = s["curves"]
            write_csv(out / f"curves_alpha_{a}.csv", ["t", "rho", "u_variance"],
                      [c["t"], c["rho"], c["u_variance"]])
        write_json(out / "config.json", {**cfg.resolved(), "artifact_version": __version__})
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, out: Path, jobs: int) -> int:
    th = _thresholds(cfg.thresholds)
    grid = make_grid(cfg.T, cfg.grid_step)
    checks = []
    for scale in cfg.scalings():
        ens = replicate(cfg.model, scale, cfg.T, grid, cfg.R, cfg.theta_list, cfg.base_seed, jobs)
        header = ["t", "mean_u", "var_u", "se_var"]
        cols = [grid, ens.mean, ens.variance, ens.se_var]
        for theta in cfg.theta_list:
            est, se = ens.mgf[float(theta)]
            header += [f"mgf_theta_{_label(theta)}", f"se_mgf_{_label(theta)}"]
            cols += [est, se]
        tag = f"alpha_{_label(scale.alpha)}_N_{scale.N}"
        write_csv(out / f"ensemble_{tag}.csv", header, cols)
        path = simulate_path(cfg.model, scale, cfg.T, grid, derive_seed(cfg.base_seed, 0))
        write_csv(out / f"path_{tag}_r0.csv",
                  ["t", "j", "m"] + [f"z_{i + 1}" for i in range(cfg.model.d)],
                  [grid, path.j_path + 1, path.m_path, *path.z_path.T])
        target = limits.u_limit_variance(cfg.model, scale.alpha, grid[-1])
        tol = max(th["se_multiplier"] * ens.se_var[-1], th["u_var_rel_floor"] * target)
        checks.append(Check(f"u_var_{tag}_t_{_label(grid[-1])}",
                            bool(abs(ens.variance[-1] - target) <= tol),
                            value=ens.variance[-1], target=target, tolerance=tol))
    return _finish(out, cfg, "simulate", checks)


def cmd_mgf(cfg: RunConfig, out: Path) -> int:
    grid = make_grid(cfg.T, cfg.grid_step)
    checks = []
    for a in cfg.alphas:
        for n in cfg.N_list:
            for theta in cfg.theta_list:
                c = mgf_ode.mgf_u_curve(cfg.model, n, a, theta, grid)
                lim = c.limit(cfg.model)
                write_csv(out / f"mgf_alpha_{_label(a)}_N_{n}_theta_{_label(theta)}.csv",
                          ["t", "lambda_N", "lambda_limit", "abs_err"],
                          [grid, c.values, lim, np.abs(c.values - lim)])
                checks.append(Check(f"mgf_positive_alpha_{_label(a)}_N_{n}_theta_{_label(theta)}",
                                    bool(np.all(np.isfinite(c.values)) and np.all(c.values > 0))))
    return _finish(out, cfg, "mgf", checks)


def cmd_converge(cfg: RunConfig, out: Path) -> int:
    th = _thresholds(cfg.thresholds)
    sweeps = []
    for theta in cfg.theta_list:
        for a in cfg.alphas:
            s, _ = convergence_sweep(cfg.model, a, cfg.N_list, theta)
            sweeps.append(s)
    write_csv(out / "sup_error.csv", ["alpha", "theta", "N", "sup_error"],
              [np.repeat([s.alpha for s in sweeps], [s.N.size for s in sweeps]),
               np.repeat([s.theta for s in sweeps], [s.N.size for s in sweeps]),
               np.concatenate([s.N for s in sweeps]), np.concatenate([s.error for s in sweeps])])
    write_csv(out / "rate_fit.csv", ["alpha", "theta", "slope", "slope_se"],
              [[s.alpha for s in sweeps], [s.theta for s in sweeps],
               [s.slope for s in sweeps], [s.slope_se for s in sweeps]])
    checks = []
    for theta in cfg.theta_list:
        checks += _sweep_checks([s for s in sweeps if s.theta == float(theta)], th)
    return _finish(out, cfg, "converge", checks)


def cmd_reproduce(cfg: RunConfig, out: Path) -> int:
    theta = cfg.theta_list[0] if cfg.theta_list else 0.5
    report = reproduce_example(out, cfg.model, cfg.alphas, cfg.N_list, theta, cfg.base_seed,
                               cfg.thresholds,
                               config={**cfg.resolved(), "artifact_version": __version__})
    return EXIT_OK if report["passed"] else EXIT_CHECKS


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mmisq", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, needs_config in [("analyze", True), ("simulate", True), ("mgf", True),
                               ("converge", True), ("reproduce", False)]:
        s = sub.add_parser(name)
        s.add_argument("config", nargs=None if needs_config else "?", help="JSON run configuration")
        s.add_argument("--out", help="output directory (overrides 'output' in the config)")
        s.add_argument("--jobs", type=int, default=default_jobs(),
                       help="worker processes for replications (default: CPU count)")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config is None:
            cfg = parse_config({}, require_model=False)
        else:
            cfg = load_config(args.config, require_model=args.command != "reproduce")
        cfg = _apply_seed_env(cfg)
        if args.command == "analyze":
            out = Path(args.out or cfg.output) if (args.out or cfg.output) else None
            return cmd_analyze(cfg, out)
        out = _out_dir(args, cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg, out, args.jobs)
        if args.command == "mgf":
            return cmd_mgf(cfg, out)
        if args.command == "converge":
            return cmd_converge(cfg, out)
        return cmd_reproduce(cfg, out)
    except (MmisqError, KeyError, OSError) as exc:
        print(f"mmisq: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
