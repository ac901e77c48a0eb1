"""JSON run configuration: parsing, validation and the resolved (defaults filled) form."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import ctmc
from .errors import ConfigError, MmisqError
from .experiments import DEFAULT_ALPHAS, DEFAULT_N_SWEEP, DEFAULT_THRESHOLDS
from .model import ModelSpec, ScalingSpec, example_model

__all__ = ["RunConfig", "load_config", "parse_config"]

_TOP = {"model", "scaling", "experiment", "output", "artifact_version"}
_MODEL = {"Q", "lambda", "mu", "rho0"}
_SCALING = {"alpha", "alpha_list", "N", "N_list"}
_EXPERIMENT = {"T", "grid_step", "R", "theta_list", "base_seed", "thresholds"}

DEFAULT_EXPERIMENT = {"T": 1.0, "grid_step": 0.1, "R": 1000, "theta_list": [0.5], "base_seed": 0}


@dataclass
class RunConfig:
    model: ModelSpec
    alphas: list
    N_list: list
    T: float
    grid_step: float
    R: int
    theta_list: list
    base_seed: int
    thresholds: dict = field(default_factory=dict)
    output: str | None = None
    raw_model: dict | None = None

    @property
    def alpha(self) -> float:
        return self.alphas[0]

    def scalings(self, alpha=None):
        a = self.alpha if alpha is None else alpha
        return [ScalingSpec(n, a) for n in self.N_list]

    def resolved(self) -> dict:
        """Config dictionary with every default filled in; it parses back to the same run."""
        m = self.raw_model
        if m is None:
            m = {"Q": self.model.G.rates.tolist(), "lambda": self.model.lam.tolist(),
                 "mu": self.model.mu, "rho0": self.model.rho0}
        exp = {"T": self.T, "grid_step": self.grid_step, "R": self.R, "theta_list": list(self.theta_list),
               "base_seed": self.base_seed}
        if self.thresholds:
            exp["thresholds"] = dict(self.thresholds)
        return {"model": m, "scaling": {"alpha_list": list(self.alphas), "N_list": list(self.N_list)},
                "experiment": exp}


def _unknown(block: dict, allowed: set, where: str):
    extra = sorted(set(block) - allowed)
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(map(repr, extra))}")


def _block(doc, key) -> dict:
    b = doc.get(key, {})
    if not isinstance(b, dict):
        raise ConfigError(f"{key}: expected an object")
    return b


def _number(v, where, positive=False, nonneg=False, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{where}: expected an integer, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"{where}: must be positive, got {v!r}")
    if nonneg and not v >= 0:
        raise ConfigError(f"{where}: must be nonnegative, got {v!r}")
    return int(v) if integer else float(v)


def _parse_q(q, d):
    """Row-major nested list, flat list of length d*d, or 1-based ``"i,j": rate`` map."""
    if isinstance(q, dict):
        mat = np.zeros((d, d))
        for key, rate in q.items():
            try:
                i, j = (int(s) for s in str(key).split(","))
            except ValueError:
                raise ConfigError(f"model.Q: key {key!r} is not of the form 'i,j'") from None
            if not (1 <= i <= d and 1 <= j <= d) or i == j:
                raise ConfigError(f"model.Q: key {key!r} is not an off-diagonal index of a {d}-state chain")
            mat[i - 1, j - 1] = _number(rate, f"model.Q[{key!r}]")
        return mat, True
    if not isinstance(q, list):
        raise ConfigError("model.Q: expected a list of rows or an off-diagonal map")
    if q and all(isinstance(r, list) for r in q):
        if len(q) != d or any(len(r) != d for r in q):
            raise ConfigError(f"model.Q: expected a {d}x{d} matrix to match lambda")
        return np.array([[_number(x, f"model.Q[{i + 1}]") for x in r] for i, r in enumerate(q)]), False
    if len(q) != d * d:
        raise ConfigError(f"model.Q: flat list must have {d * d} entries")
    return np.array([_number(x, "model.Q") for x in q]).reshape(d, d), False


def _parse_model(m: dict) -> ModelSpec:
    _unknown(m, _MODEL, "model")
    for key in ("Q", "lambda", "mu"):
        if key not in m:
            raise ConfigError(f"model: missing required key {key!r}")
    lam = m["lambda"]
    if not isinstance(lam, list) or not lam:
        raise ConfigError("model.lambda: expected a non-empty list")
    lam = np.array([_number(x, f"model.lambda[{i + 1}]", nonneg=True) for i, x in enumerate(lam)])
    q, fill = _parse_q(m["Q"], lam.size)
    try:
        G = ctmc.validate_generator(q, fill_diagonal=fill)
        return ModelSpec(G, lam, _number(m["mu"], "model.mu", positive=True),
                         _number(m.get("rho0", 0.0), "model.rho0", nonneg=True))
    except MmisqError as exc:
        raise ConfigError(f"model.Q: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc


def _list_or_scalar(block, one, many, default, where, **kind):
    if one in block and many in block:
        raise ConfigError(f"{where}: give either {one!r} or {many!r}, not both")
    if many in block:
        vals = block[many]
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"{where}.{many}: expected a non-empty list")
        return [_number(v, f"{where}.{many}", **kind) for v in vals]
    if one in block:
        return [_number(block[one], f"{where}.{one}", **kind)]
    return list(default)


def parse_config(doc: dict, require_model: bool = True) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be a JSON object")
    _unknown(doc, _TOP, "config")
    if "model" in doc:
        raw_model = _block(doc, "model")
        model = _parse_model(raw_model)
    elif require_model:
        raise ConfigError("config: missing required block 'model'")
    else:
        raw_model, model = None, example_model()
    sc = _block(doc, "scaling")
    _unknown(sc, _SCALING, "scaling")
    alphas = _list_or_scalar(sc, "alpha", "alpha_list", DEFAULT_ALPHAS, "scaling", positive=True)
    N_list = _list_or_scalar(sc, "N", "N_list", DEFAULT_N_SWEEP, "scaling", positive=True, integer=True)
    ex = _block(doc, "experiment")
    _unknown(ex, _EXPERIMENT, "experiment")
    e = {**DEFAULT_EXPERIMENT, **ex}
    T = _number(e["T"], "experiment.T", positive=True)
    step = _number(e["grid_step"], "experiment.grid_step", positive=True)
    R = _number(e["R"], "experiment.R", integer=True)
    if R < 2:
        raise ConfigError(f"experiment.R: need at least 2 replications, got {R}")
    thetas = e["theta_list"]
    if not isinstance(thetas, list):
        raise ConfigError("experiment.theta_list: expected a list")
    thetas = [_number(x, "experiment.theta_list") for x in thetas]
    seed = _number(e["base_seed"], "experiment.base_seed", nonneg=True, integer=True)
    th = e.get("thresholds", {}) or {}
    if not isinstance(th, dict):
        raise ConfigError("experiment.thresholds: expected an object")
    _unknown(th, set(DEFAULT_THRESHOLDS), "experiment.thresholds")
    th = {k: _number(v, f"experiment.thresholds.{k}", positive=True) for k, v in th.items()}
    out = doc.get("output")
    if out is not None and not isinstance(out, str):
        raise ConfigError("output: expected a directory path string")
    return RunConfig(model, alphas, N_list, T, step, R, thetas, seed, th, out, raw_model)


def load_config(path, require_model: bool = True) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return parse_config(doc, require_model)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
