"""Streaming moment accumulation and small estimator helpers."""
from __future__ import annotations

import numpy as np

__all__ = [
    "MomentAccumulator",
    "jackknife_mean_se",
    "skewness_se",
    "kurtosis_se",
]


class MomentAccumulator:
    """One-pass central moments up to order four, elementwise over an array shape.

    Uses the Terriberry update, which is numerically stable for long
    streams.  Observations are folded in call order, so feeding the same
    sequence always gives bit-identical results.
    """

    def __init__(self, shape=()):
        self.n = 0
        self.mean = np.zeros(shape)
        self.m2 = np.zeros(shape)
        self.m3 = np.zeros(shape)
        self.m4 = np.zeros(shape)

    def push(self, x):
        x = np.asarray(x, dtype=float)
        n1 = self.n
        self.n += 1
        n = self.n
        delta = x - self.mean
        dn = delta / n
        dn2 = dn * dn
        term1 = delta * dn * n1
        self.mean = self.mean + dn
        self.m4 = self.m4 + term1 * dn2 * (n * n - 3 * n + 3) + 6 * dn2 * self.m2 - 4 * dn * self.m3
        self.m3 = self.m3 + term1 * dn * (n - 2) - 3 * dn * self.m2
        self.m2 = self.m2 + term1

    def extend(self, rows):
        for row in rows:
            self.push(row)

    @property
    def variance(self):
        """Unbiased sample variance."""
        return self.m2 / (self.n - 1)

    @property
    def se_mean(self):
        return np.sqrt(self.variance / self.n)

    @property
    def se_variance(self):
        """Standard error of the sample variance.

        ``Var(s^2) ~ (m4 - (n-3)/(n-1) s^4) / n`` with the fourth central
        moment estimated by ``M4 / n``.
        """
        n = self.n
        s2 = self.variance
        m4 = self.m4 / n
        v = (m4 - (n - 3) / (n - 1) * s2 * s2) / n
        return np.sqrt(np.maximum(v, 0.0))

    @property
    def skewness(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.m2 > 0, np.sqrt(self.n) * self.m3 / np.power(self.m2, 1.5), 0.0)

    @property
    def excess_kurtosis(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.m2 > 0, self.n * self.m4 / (self.m2 * self.m2) - 3.0, 0.0)


def jackknife_mean_se(x, axis=0):
    """Jackknife standard error of a sample mean.

    Leave-one-out means are formed in closed form; for the mean the result
    coincides with ``s / sqrt(n)``.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[axis]
    loo = (x.sum(axis=axis, keepdims=True) - x) / (n - 1)
    dev = loo - loo.mean(axis=axis, keepdims=True)
    return np.sqrt((n - 1) / n * (dev * dev).sum(axis=axis))


def skewness_se(n: int) -> float:
    return float(np.sqrt(6.0 * n * (n - 1) / ((n - 2) * (n + 1) * (n + 3))))


def kurtosis_se(n: int) -> float:
    return float(2.0 * skewness_se(n) * np.sqrt((n * n - 1.0) / ((n - 3) * (n + 5))))
