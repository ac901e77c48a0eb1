"""Model and scaling descriptions for the Markov-modulated infinite-server queue."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import ctmc
from .errors import DimensionMismatch, NonpositiveAlpha

__all__ = ["ModelSpec", "ScalingSpec", "example_model"]


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Unscaled system: background generator, per-state arrival rates, decay rate.

    Attributes
    ----------
    G : ctmc.Generator
    lam : ndarray
        Arrival rate in each background state.
    mu : float
        Per-molecule decay rate.
    rho0 : float
        Initial scaled level; the N-system starts with ``round(N * rho0)``
        molecules.
    allow_zero_lambda : bool
        Permit ``lam == 0`` everywhere (used for background-only studies).
    """

    G: ctmc.Generator
    lam: np.ndarray
    mu: float
    rho0: float = 0.0
    allow_zero_lambda: bool = False

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float)
        if lam.shape != (self.G.d,):
            raise DimensionMismatch(f"lambda has length {lam.size}, generator has {self.G.d} states")
        if np.any(lam < 0) or not np.all(np.isfinite(lam)):
            raise ValueError("arrival rates must be finite and nonnegative")
        if not self.allow_zero_lambda and not np.any(lam > 0):
            raise ValueError("all arrival rates are zero (pass allow_zero_lambda=True if intended)")
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.rho0 >= 0:
            raise ValueError(f"rho0 must be nonnegative, got {self.rho0}")
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "rho0", float(self.rho0))

    @property
    def d(self) -> int:
        return self.G.d

    @cached_property
    def law(self) -> ctmc.StationaryLaw:
        return ctmc.stationary_distribution(self.G)

    @property
    def pi(self) -> np.ndarray:
        return self.law.pi

    @cached_property
    def deviation(self) -> ctmc.DeviationMatrix:
        return ctmc.deviation_matrix(self.G, self.law)

    @cached_property
    def covariance(self) -> ctmc.CovarianceC:
        return ctmc.covariance_c(self.law, self.deviation)

    @cached_property
    def lam_inf(self) -> float:
        """Stationary mean arrival rate ``pi^T lam``."""
        return float(self.pi @ self.lam)

    @cached_property
    def thorn(self) -> float:
        return ctmc.thorn(self.lam, self.covariance)

    def initial_count(self, N: int) -> int:
        # numpy rounds half to even
        return int(np.rint(N * self.rho0))


@dataclass(frozen=True)
class ScalingSpec:
    """Scale ``N`` and time-scale exponent ``alpha``; ``beta`` is derived."""

    N: int
    alpha: float
    beta: float = field(init=False)

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if not self.alpha > 0:
            raise NonpositiveAlpha(f"alpha must be positive, got {self.alpha}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", min(self.alpha / 2.0, 0.5))

    @property
    def background_speed(self) -> float:
        return float(self.N) ** self.alpha

    @property
    def divisor(self) -> float:
        """``N^(1 - beta)``, the normaliser of the centred count."""
        return float(self.N) ** (1.0 - self.beta)


def example_model() -> ModelSpec:
    """Two-state model with q = (1, 3), lambda = (1, 4), mu = 1, rho0 = 0."""
    G = ctmc.validate_generator([[-1.0, 1.0], [3.0, -3.0]])
    return ModelSpec(G, np.array([1.0, 4.0]), mu=1.0, rho0=0.0)
