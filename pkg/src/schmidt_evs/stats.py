"""Empirical distributions, moments and goodness-of-fit measures."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array

from .exceptions import DomainError
from .laws import johnstone_center_scale

__all__ = [
    "EmpiricalDistribution",
    "rice_bins",
    "histogram",
    "histogram_from_counts",
    "empirical_root_moment",
    "center_rescale",
    "ks_distance",
    "CenterScaler",
]


@dataclass
class EmpiricalDistribution:
    """A sample together with its unit-mass histogram.

    ``samples`` may be ``None`` when the distribution was assembled from
    merged bin counts; moments then come from the stored raw power sums.
    """

    samples: np.ndarray | None
    bin_edges: np.ndarray
    density: np.ndarray
    counts: np.ndarray
    power_sums: np.ndarray | None = None

    @property
    def n(self):
        return int(self.counts.sum()) if self.samples is None else int(self.samples.size)

    @property
    def centers(self):
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def widths(self):
        return np.diff(self.bin_edges)

    def mass(self):
        return float(np.sum(self.density * self.widths))

    def moment(self, k):
        """Raw k-th sample moment."""
        if self.samples is not None:
            return float(np.mean(self.samples ** k))
        if self.power_sums is not None and k < len(self.power_sums):
            return float(self.power_sums[k] / self.power_sums[0])
        raise ValueError("no samples or power sums available for this moment")

    def root_moment(self, k):
        return self.moment(k) ** (1.0 / k)


def rice_bins(n):
    return max(1, int(math.ceil(2.0 * n ** (1.0 / 3.0))))


def histogram(samples, bins=None, range=None):
    """Unit-mass density histogram; ``bins`` defaults to the Rice rule."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("histogram of an empty sample")
    bins = rice_bins(x.size) if bins is None else int(bins)
    if bins < 1:
        raise ValueError("bins must be positive")
    if range is None:
        lo, hi = float(x.min()), float(x.max())
        if lo == hi:
            eps = 1e-6 * max(abs(lo), 1.0)
            lo, hi = lo - eps, hi + eps
    else:
        lo, hi = map(float, range)
        if not lo < hi:
            raise ValueError("range must satisfy lo < hi")
    counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
    dist = histogram_from_counts(counts, edges)
    dist.samples = x
    return dist


def histogram_from_counts(counts, edges, power_sums=None):
    counts = np.asarray(counts)
    edges = np.asarray(edges, dtype=float)
    if np.any(np.diff(edges) <= 0):
        raise ValueError("bin edges must be strictly increasing")
    total = counts.sum()
    widths = np.diff(edges)
    density = counts / (total * widths) if total > 0 else np.zeros_like(widths)
    return EmpiricalDistribution(None, edges, density, counts, power_sums)


def empirical_root_moment(samples, k):
    """(mean of x^k)^(1/k) for non-negative samples."""
    if k < 1 or int(k) != k:
        raise DomainError("k must be a positive integer")
    x = np.asarray(samples, dtype=float)
    if np.any(x < 0):
        raise DomainError("root moments need non-negative samples")
    return float(np.mean(x ** k) ** (1.0 / k))


def center_rescale(values, center, scale):
    if not scale > 0:
        raise DomainError("scale must be positive")
    return (np.asarray(values, dtype=float) - center) / scale


def ks_distance(samples, cdf):
    """Kolmogorov-Smirnov statistic sup |F_n - F| of ``samples`` against ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise ValueError("KS distance of an empty sample")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


class CenterScaler(TransformerMixin, BaseEstimator):
    """Fixed affine standardization ``(x - center) / scale``.

    Unlike :class:`sklearn.preprocessing.StandardScaler` the constants are
    given, not learned, e.g. the asymptotic largest-eigenvalue center and
    width from :meth:`johnstone`.
    """

    def __init__(self, center=0.0, scale=1.0):
        self.center = center
        self.scale = scale

    @classmethod
    def johnstone(cls, D):
        c, s = johnstone_center_scale(D)
        return cls(center=c, scale=s)

    def fit(self, X, y=None):
        if not self.scale > 0:
            raise DomainError("scale must be positive")
        self.n_features_in_ = check_array(X, ensure_2d=False).reshape(len(X), -1).shape[1]
        return self

    def transform(self, X):
        return center_rescale(X, self.center, self.scale)

    def inverse_transform(self, X):
        return np.asarray(X, dtype=float) * self.scale + self.center
