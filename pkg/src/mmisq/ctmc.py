"""Exact analytics for small irreducible continuous-time Markov chains.

Everything here works on a validated :class:`Generator` and returns plain
numpy arrays wrapped in small frozen containers.  The chains of interest
are tiny (a handful of states), so dense linear algebra is used throughout.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.sparse.csgraph import connected_components

from .errors import (
    DimensionMismatch,
    NegativeRate,
    NegativeTime,
    Reducible,
    RowSumViolation,
    SingularSystem,
)

__all__ = [
    "Generator",
    "StationaryLaw",
    "DeviationMatrix",
    "CovarianceC",
    "validate_generator",
    "stationary_distribution",
    "transient_matrix",
    "deviation_matrix",
    "covariance_c",
    "thorn",
    "spectral_gap",
]

ROW_SUM_TOL = 1e-12
DIAGONAL_TOL = 1e-9
POISSON_TAIL = 1e-14
# largest uniformization horizon handled without squaring
_MAX_UNIF = 8.0


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Generator:
    """Validated rate matrix of an irreducible CTMC.

    Build with :func:`validate_generator`; the constructor does not check.
    """

    rates: np.ndarray

    @property
    def d(self) -> int:
        return self.rates.shape[0]

    @property
    def exit_rates(self) -> np.ndarray:
        return -np.diag(self.rates)


@dataclass(frozen=True, eq=False)
class StationaryLaw:
    pi: np.ndarray


@dataclass(frozen=True, eq=False)
class DeviationMatrix:
    D: np.ndarray


@dataclass(frozen=True, eq=False)
class CovarianceC:
    C: np.ndarray


def _is_irreducible(offdiag: np.ndarray) -> bool:
    n, _ = connected_components(offdiag > 0, directed=True, connection="strong")
    return n == 1


def validate_generator(rates, fill_diagonal: bool = False) -> Generator:
    """Check a rate matrix and return it as a :class:`Generator`.

    Parameters
    ----------
    rates : array_like, shape (d, d)
        Transition rates.  Off-diagonal entries must be nonnegative.
    fill_diagonal : bool
        If True the supplied diagonal is ignored and replaced by the negative
        off-diagonal row sums.  Otherwise the diagonal must already match
        those sums to within ``1e-9``; it is then snapped to them exactly so
        that rows sum to zero at machine precision.

    Raises
    ------
    NegativeRate, RowSumViolation, Reducible, DimensionMismatch
    """
    q = np.array(rates, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1] or q.shape[0] < 1:
        raise DimensionMismatch(f"generator must be a non-empty square matrix, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("generator has non-finite entries")
    d = q.shape[0]
    off = q.copy()
    np.fill_diagonal(off, 0.0)
    bad = np.argwhere(off < 0)
    if bad.size:
        i, j = bad[0]
        raise NegativeRate(f"negative rate q[{i + 1},{j + 1}] = {q[i, j]}")
    exit_rates = off.sum(axis=1)
    if not fill_diagonal:
        gap = np.abs(np.diag(q) + exit_rates)
        rows = np.flatnonzero(gap > DIAGONAL_TOL)
        if rows.size:
            i = rows[0]
            raise RowSumViolation(f"row {i + 1} sums to {q[i].sum():.3g}, expected 0")
    if d > 1 and not _is_irreducible(off):
        raise Reducible("generator has more than one communicating class")
    q = off
    q[np.diag_indices(d)] = -exit_rates
    return Generator(_frozen(q))


def stationary_distribution(G: Generator) -> StationaryLaw:
    """Solve ``pi^T Q = 0`` with ``sum(pi) = 1``.

    The augmented system ``[Q^T; 1^T] pi = [0; 1]`` is solved in the
    least-squares sense, which also covers ``d = 1``.
    """
    d = G.d
    A = np.vstack([G.rates.T, np.ones((1, d))])
    b = np.zeros(d + 1)
    b[-1] = 1.0
    pi, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
    if rank < d or not np.all(np.isfinite(pi)):
        raise SingularSystem("stationary system is rank deficient")
    # clip roundoff-level negatives, then renormalise
    pi = np.where(pi < 0, 0.0, pi)
    pi /= pi.sum()
    return StationaryLaw(_frozen(pi))


def _poisson_weights(a: float) -> np.ndarray:
    w = [np.exp(-a)]
    total = w[0]
    k = 0
    while 1.0 - total >= POISSON_TAIL and k < 10_000:
        k += 1
        w.append(w[-1] * a / k)
        total += w[-1]
    return np.array(w)


def transient_matrix(G: Generator, t: float) -> np.ndarray:
    """Return ``exp(Q t)`` by uniformization.

    ``exp(Qt) = sum_k Pois(k; L t) (I + Q/L)^k`` with ``L = max_i q_i``;
    the series is cut once the Poisson tail drops below ``1e-14``.  Long
    horizons are split into ``2^s`` equal pieces and squared back up.
    """
    if t < 0:
        raise NegativeTime(f"t must be nonnegative, got {t}")
    d = G.d
    unif = float(G.exit_rates.max()) if d > 1 else 0.0
    if t == 0 or unif == 0.0:
        return np.eye(d)
    a = unif * t
    squarings = max(0, int(np.ceil(np.log2(a / _MAX_UNIF)))) if a > _MAX_UNIF else 0
    a /= 2.0**squarings
    P = np.eye(d) + G.rates / unif
    term = np.eye(d)
    out = np.zeros((d, d))
    for w in _poisson_weights(a):
        out += w * term
        term = term @ P
    for _ in range(squarings):
        out = out @ out
    return out


def deviation_matrix(G: Generator, law: StationaryLaw | None = None) -> DeviationMatrix:
    """Deviation matrix ``D = (Pi - Q)^{-1} - Pi`` with ``Pi = 1 pi^T``."""
    if law is None:
        law = stationary_distribution(G)
    d = G.d
    Pi = np.outer(np.ones(d), law.pi)
    try:
        lu = lu_factor(Pi - G.rates, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:  # pragma: no cover
        raise SingularSystem(str(exc)) from exc
    if np.any(np.abs(np.diag(lu[0])) < 1e-300):
        raise SingularSystem("fundamental matrix is singular")
    D = lu_solve(lu, np.eye(d)) - Pi
    return DeviationMatrix(_frozen(D))


def covariance_c(law: StationaryLaw, dev: DeviationMatrix) -> CovarianceC:
    """``C_ij = pi_i D_ij + pi_j D_ji``, symmetrised against roundoff."""
    pi, D = law.pi, dev.D
    if D.shape != (pi.size, pi.size):
        raise DimensionMismatch(f"pi has length {pi.size} but D has shape {D.shape}")
    C = pi[:, None] * D
    C = C + C.T
    return CovarianceC(_frozen(C))


def thorn(lam, cov: CovarianceC) -> float:
    """Quadratic form ``lam^T C lam``, the modulation diffusion coefficient."""
    lam = np.asarray(lam, dtype=float)
    C = cov.C
    if lam.shape != (C.shape[0],):
        raise DimensionMismatch(f"lambda has shape {lam.shape}, C has shape {C.shape}")
    if np.any(lam < 0):
        raise ValueError("arrival rates must be nonnegative")
    # center first: C @ 1 = 0, and centering keeps roundoff small
    lc = lam - lam.mean()
    return max(0.0, float(lc @ C @ lc))


def spectral_gap(G: Generator) -> float:
    """Smallest nonzero ``|Re(eigenvalue)|`` of Q (0 for a single state)."""
    if G.d == 1:
        return 0.0
    ev = np.linalg.eigvals(G.rates)
    re = np.sort(np.abs(ev.real))
    return float(re[1])
