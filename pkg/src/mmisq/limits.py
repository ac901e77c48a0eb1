"""Closed-form limit objects: fluid limit, regimes, OU moments and the limiting MGF.

All formulas assume the limit process starts at ``U(0) = 0``.  Terms of the
form ``1 - exp(-x)`` are evaluated as ``-expm1(-x)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import NegativeTime, NonpositiveAlpha, NonpositiveB
from .model import ModelSpec

__all__ = [
    "RegimeKind",
    "Regime",
    "OuParams",
    "fluid_limit",
    "fluid_integral",
    "classify",
    "sigma_profile",
    "ou_moments",
    "poisson_variance",
    "modulation_variance",
    "u_limit_variance",
    "u_limit_covariance",
    "limit_mgf",
    "stationary_ou",
]


class RegimeKind(enum.Enum):
    SUB = "sub"  # alpha < 1
    CRITICAL = "critical"  # alpha == 1
    SUPER = "super"  # alpha > 1


@dataclass(frozen=True)
class Regime:
    kind: RegimeKind
    beta: float

    @property
    def has_poisson_noise(self) -> bool:
        return self.kind is not RegimeKind.SUB

    @property
    def has_modulation_noise(self) -> bool:
        return self.kind is not RegimeKind.SUPER


@dataclass(frozen=True)
class OuParams:
    """``dS = (a - b S) dt + sqrt(c) dW`` started at ``s0``."""

    a: float
    b: float
    c: float
    s0: float = 0.0

    def __post_init__(self):
        if not self.b > 0:
            raise NonpositiveB(f"mean-reversion rate b must be positive, got {self.b}")
        if self.c < 0:
            raise ValueError(f"diffusion coefficient c must be nonnegative, got {self.c}")


def _one_minus_exp(x):
    return -np.expm1(-np.asarray(x, dtype=float))


def _check_time(t):
    if np.any(np.asarray(t) < 0):
        raise NegativeTime("time must be nonnegative")


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def fluid_limit(model: ModelSpec, t):
    """``rho(t) = rho0 e^{-mu t} + (lam_inf / mu) (1 - e^{-mu t})``."""
    _check_time(t)
    t = np.asarray(t, dtype=float)
    mu = model.mu
    return _scalar(model.rho0 * np.exp(-mu * t) + model.lam_inf / mu * _one_minus_exp(mu * t))


def fluid_integral(model: ModelSpec, t):
    """Closed form of ``int_0^t rho(s) ds``."""
    t = np.asarray(t, dtype=float)
    mu = model.mu
    g = _one_minus_exp(mu * t) / mu
    return _scalar(model.rho0 * g + model.lam_inf / mu * (t - g))


def classify(alpha: float) -> Regime:
    """Regime of the time-scale exponent; the test ``alpha == 1`` is exact."""
    if not alpha > 0:
        raise NonpositiveAlpha(f"alpha must be positive, got {alpha}")
    if alpha > 1:
        kind = RegimeKind.SUPER
    elif alpha < 1:
        kind = RegimeKind.SUB
    else:
        kind = RegimeKind.CRITICAL
    return Regime(kind, min(alpha / 2.0, 0.5))


def sigma_profile(model: ModelSpec, alpha: float, s):
    """Diffusion coefficient of the limiting SDE at time ``s``."""
    regime = classify(alpha)
    _check_time(s)
    s = np.asarray(s, dtype=float)
    sq = np.zeros_like(s)
    if regime.has_poisson_noise:
        sq = sq + model.lam_inf + model.mu * np.asarray(fluid_limit(model, s))
    if regime.has_modulation_noise:
        sq = sq + model.thorn
    return _scalar(np.sqrt(sq))


def ou_moments(p: OuParams, t, u=0.0):
    """Mean and variance of ``S(t)`` and ``Cov(S(t), S(t + u))`` for lag ``u >= 0``."""
    _check_time(t)
    _check_time(u)
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    b = p.b
    mean = p.s0 * np.exp(-b * t) + p.a / b * _one_minus_exp(b * t)
    var = p.c / (2 * b) * _one_minus_exp(2 * b * t)
    cov = np.exp(-b * u) * var
    return _scalar(mean), _scalar(var), _scalar(cov)


def poisson_variance(model: ModelSpec, t):
    """Variance contributed by arrival/departure noise: ``(rho0 e^{-mu t} + lam_inf/mu)(1 - e^{-mu t})``."""
    t = np.asarray(t, dtype=float)
    mu = model.mu
    return _scalar((model.rho0 * np.exp(-mu * t) + model.lam_inf / mu) * _one_minus_exp(mu * t))


def modulation_variance(model: ModelSpec, t):
    """Variance contributed by background fluctuations: ``Thorn (1 - e^{-2 mu t}) / (2 mu)``."""
    t = np.asarray(t, dtype=float)
    mu = model.mu
    return _scalar(model.thorn * _one_minus_exp(2 * mu * t) / (2 * mu))


def u_limit_variance(model: ModelSpec, alpha: float, t):
    regime = classify(alpha)
    _check_time(t)
    v = 0.0
    if regime.has_poisson_noise:
        v = v + np.asarray(poisson_variance(model, t))
    if regime.has_modulation_noise:
        v = v + np.asarray(modulation_variance(model, t))
    return _scalar(np.asarray(v, dtype=float))


def u_limit_covariance(model: ModelSpec, alpha: float, t, u):
    """``Cov(U(t), U(t + u)) = e^{-mu u} Var U(t)`` in every regime."""
    _check_time(u)
    u = np.asarray(u, dtype=float)
    return _scalar(np.exp(-model.mu * u) * np.asarray(u_limit_variance(model, alpha, t)))


def limit_mgf(model: ModelSpec, alpha: float, t, theta):
    """MGF of the Gaussian limit, ``exp(theta^2 / 2 * Var U(t))``.

    At ``alpha == 1`` both variance terms are present.
    """
    theta = np.asarray(theta, dtype=float)
    var = np.asarray(u_limit_variance(model, alpha, t))
    return _scalar(np.exp(0.5 * theta * theta * var))


def stationary_ou(model: ModelSpec, alpha: float) -> OuParams:
    """OU parameters the limit settles into for large t."""
    c = 0.0
    regime = classify(alpha)
    if regime.has_poisson_noise:
        c += 2.0 * model.lam_inf
    if regime.has_modulation_noise:
        c += model.thorn
    return OuParams(0.0, model.mu, c)

