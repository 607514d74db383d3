"""Maximum-likelihood fits of the extreme-value and generalized hyperbolic laws.

Both fitters follow the scikit-learn estimator protocol: hyperparameters go
to ``__init__``, ``fit`` stores results in trailing-underscore attributes and
``score_samples`` returns per-sample log densities.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize, stats
from sklearn.base import BaseEstimator, DensityMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import laws
from .exceptions import ConvergenceError, DomainError

__all__ = [
    "GevFit",
    "GhdFit",
    "GEVEstimator",
    "GHDEstimator",
    "fit_gev",
    "fit_ghd",
    "gev_pwm",
    "gev_nll",
    "sample_gev",
    "sample_ghd",
    "sample_ghd_mixture",
]


@dataclass(frozen=True)
class GevFit:
    location: float
    scale: float
    shape: float
    neg_log_likelihood: float
    sample_count: int
    converged: bool = True

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class GhdFit:
    b: float
    xi: float
    a: float
    c: float
    neg_log_likelihood: float
    sample_count: int
    binned: bool = False
    converged: bool = True

    def to_dict(self):
        return asdict(self)


def _as_1d(X):
    return check_array(np.asarray(X, dtype=float).reshape(-1, 1)).ravel()


# --- GEV -----------------------------------------------------------------------


def gev_nll(x, location, scale, shape):
    """Negative log-likelihood of ``x`` under GEV(location, scale, shape)."""
    if not scale > 0:
        return math.inf
    ll = laws.gev_logpdf((np.asarray(x) - location) / scale, shape)
    total = float(np.sum(ll))
    if not np.isfinite(total):
        return math.inf
    return -total + x.size * math.log(scale)


def gev_pwm(x):
    """Probability-weighted-moment estimate (location, scale, shape).

    Hosking's L-moment estimator; its shape ``k`` uses the same sign
    convention as :func:`laws.gev_pdf` (``k > 0`` bounded above).
    """
    x = np.sort(np.asarray(x, dtype=float))
    n = x.size
    j = np.arange(n, dtype=float)
    b0 = x.mean()
    b1 = np.sum(j / (n - 1) * x) / n
    b2 = np.sum(j * (j - 1) / ((n - 1) * (n - 2)) * x) / n
    l1, l2, l3 = b0, 2 * b1 - b0, 6 * b2 - 6 * b1 + b0
    t3 = l3 / l2
    c = 2.0 / (3.0 + t3) - math.log(2.0) / math.log(3.0)
    k = 7.8590 * c + 2.9554 * c * c
    if abs(k) < 1e-8:
        scale = l2 / math.log(2.0)
        return l1 - 0.5772156649015329 * scale, scale, 0.0
    scale = l2 * k / ((1.0 - 2.0 ** (-k)) * math.gamma(1.0 + k))
    loc = l1 - scale * (1.0 - math.gamma(1.0 + k)) / k
    return loc, scale, k


def sample_gev(n, location, scale, shape, rng):
    """Inverse-cdf sampler in the same convention as :func:`laws.gev_pdf`."""
    u = rng.uniform(size=n)
    e = -np.log(u)
    y = -np.log(e) if abs(shape) < 1e-12 else (1.0 - e ** shape) / shape
    return location + scale * y


class GEVEstimator(DensityMixin, BaseEstimator):
    """Maximum-likelihood GEV fit with Nelder-Mead multi-starts.

    The first start is the PWM estimate, the rest are seeded perturbations of
    it. The shape is kept inside ``shape_bounds`` through a tanh map.

    Parameters
    ----------
    n_starts : int
    shape_bounds : tuple of float
    random_state : int
        Seed for the perturbed starts; identical input and seed give an
        identical fit.
    """

    def __init__(self, n_starts=8, shape_bounds=(-0.9, 0.9), random_state=0):
        self.n_starts = n_starts
        self.shape_bounds = shape_bounds
        self.random_state = random_state

    def _unpack(self, theta):
        lo, hi = self.shape_bounds
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        return theta[0], math.exp(theta[1]), mid + half * math.tanh(theta[2])

    def _pack(self, loc, scale, shape):
        lo, hi = self.shape_bounds
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        s = np.clip((shape - mid) / half, -0.999, 0.999)
        return np.array([loc, math.log(scale), math.atanh(s)])

    def fit(self, X, y=None):
        x = _as_1d(X)
        if x.size < 100:
            warnings.warn(f"fitting a GEV to only {x.size} samples", RuntimeWarning, stacklevel=2)
        # Work on standardized data so the simplex is well scaled.
        m, s = float(x.mean()), float(x.std())
        if not s > 0:
            raise DomainError("cannot fit a GEV to constant data")
        z = (x - m) / s

        def objective(theta):
            loc, scale, shape = self._unpack(theta)
            val = gev_nll(z, loc, scale, shape)
            return val if np.isfinite(val) else 1e300

        loc0, scale0, shape0 = gev_pwm(z)
        lo, hi = self.shape_bounds
        shape0 = float(np.clip(shape0, lo + 0.05, hi - 0.05))
        rng = np.random.default_rng(self.random_state)
        starts = [self._pack(loc0, scale0, shape0)]
        for _ in range(self.n_starts - 1):
            starts.append(self._pack(
                loc0 + 0.3 * scale0 * rng.standard_normal(),
                scale0 * math.exp(0.3 * rng.standard_normal()),
                rng.uniform(lo + 0.1, hi - 0.1),
            ))
        opts = dict(xatol=1e-9, fatol=1e-9, maxiter=4000, maxfev=8000)
        best = None
        for theta0 in starts:
            res = optimize.minimize(objective, theta0, method="Nelder-Mead", options=opts)
            if best is None or res.fun < best.fun:
                best = res
        # Restart from the winner to shake off simplex collapse.
        best = optimize.minimize(objective, best.x, method="Nelder-Mead", options=opts)
        if not np.isfinite(best.fun) or best.fun >= 1e300:
            raise ConvergenceError("GEV likelihood is infinite at every start", partial=best.x)
        loc, scale, shape = self._unpack(best.x)
        self.location_ = m + s * loc
        self.scale_ = s * scale
        self.shape_ = shape
        self.n_samples_ = x.size
        self.converged_ = bool(best.success)
        self.neg_log_likelihood_ = gev_nll(x, self.location_, self.scale_, self.shape_)
        if not self.converged_:
            warnings.warn(f"GEV optimizer stopped early: {best.message}", RuntimeWarning, stacklevel=2)
        return self

    def score_samples(self, X):
        check_is_fitted(self, "shape_")
        x = _as_1d(X)
        return laws.gev_logpdf((x - self.location_) / self.scale_, self.shape_) - math.log(self.scale_)

    def score(self, X, y=None):
        return float(np.mean(self.score_samples(X)))

    def result(self):
        check_is_fitted(self, "shape_")
        return GevFit(float(self.location_), float(self.scale_), float(self.shape_),
                      float(self.neg_log_likelihood_), int(self.n_samples_), self.converged_)


def fit_gev(maxima, n_starts=8, random_state=0):
    return GEVEstimator(n_starts=n_starts, random_state=random_state).fit(maxima).result()


# --- GHD -----------------------------------------------------------------------

_B_LIMIT = 40.0
_LOG_XI_BOUNDS = (math.log(1e-4), math.log(1e4))


def _ghd_bin_probs(edges, b, xi):
    # Simpson's rule inside each (narrow) bin.
    mids = 0.5 * (edges[1:] + edges[:-1])
    f_edges = laws.ghd_pdf(edges, b, xi)
    f_mid = laws.ghd_pdf(mids, b, xi)
    return np.diff(edges) / 6.0 * (f_edges[:-1] + 4.0 * f_mid + f_edges[1:])


class GHDEstimator(DensityMixin, BaseEstimator):
    """Maximum-likelihood fit of the unit-variance symmetric GHD in (b, xi).

    Samples are standardized to unit variance first. Above
    ``binned_threshold`` samples the likelihood is the exact multinomial one
    over ``n_bins`` equal bins spanning the data, which keeps fits of ~1e8
    eigenvector components cheap. Alternatively pass pre-binned data through
    :meth:`fit_counts`.
    """

    def __init__(self, standardize=True, binned_threshold=200_000, n_bins=2000,
                 starts=((0.5, 0.5), (1.5, 1.5), (3.0, 5.0))):
        self.standardize = standardize
        self.binned_threshold = binned_threshold
        self.n_bins = n_bins
        self.starts = starts

    def _optimize(self, nll):
        def objective(theta):
            b, log_xi = theta
            if abs(b) > _B_LIMIT or not _LOG_XI_BOUNDS[0] <= log_xi <= _LOG_XI_BOUNDS[1]:
                return 1e300
            try:
                val = nll(b, math.exp(log_xi))
            except (DomainError, ConvergenceError, FloatingPointError):
                return 1e300
            return val if np.isfinite(val) else 1e300

        opts = dict(xatol=1e-7, fatol=1e-7, maxiter=2000)
        best = None
        for b0, xi0 in self.starts:
            res = optimize.minimize(objective, [b0, math.log(xi0)], method="Nelder-Mead", options=opts)
            if best is None or res.fun < best.fun:
                best = res
        best = optimize.minimize(objective, best.x, method="Nelder-Mead", options=opts)
        if best.fun >= 1e300:
            raise ConvergenceError("GHD likelihood is infinite at every start", partial=best.x)
        return best

    def _finish(self, best, n, binned):
        b, xi = float(best.x[0]), float(math.exp(best.x[1]))
        self.b_, self.xi_ = b, xi
        self.a_, self.c_ = laws.ghd_params(b, xi)
        self.neg_log_likelihood_ = float(best.fun)
        self.n_samples_ = int(n)
        self.binned_ = binned
        self.converged_ = bool(best.success)
        return self

    def fit(self, X, y=None):
        x = _as_1d(X)
        if self.standardize:
            x = x / math.sqrt(np.mean(x * x))
        if x.size > self.binned_threshold:
            edge = float(np.max(np.abs(x))) * (1 + 1e-9)
            counts, edges = np.histogram(x, bins=self.n_bins, range=(-edge, edge))
            return self.fit_counts(counts, edges)

        def nll(b, xi):
            return -float(np.sum(laws.ghd_logpdf(x, b, xi)))

        return self._finish(self._optimize(nll), x.size, False)

    def fit_counts(self, counts, edges):
        """Fit from histogram counts of (already standardized) samples."""
        counts = np.asarray(counts, dtype=float)
        edges = np.asarray(edges, dtype=float)
        keep = counts > 0

        def nll(b, xi):
            p = _ghd_bin_probs(edges, b, xi)
            p = p / p.sum()
            with np.errstate(divide="ignore"):
                return -float(np.sum(counts[keep] * np.log(p[keep])))

        return self._finish(self._optimize(nll), counts.sum(), True)

    def score_samples(self, X):
        check_is_fitted(self, "b_")
        return laws.ghd_logpdf(_as_1d(X), self.b_, self.xi_)

    def score(self, X, y=None):
        return float(np.mean(self.score_samples(X)))

    def result(self):
        check_is_fitted(self, "b_")
        return GhdFit(self.b_, self.xi_, self.a_, self.c_, self.neg_log_likelihood_,
                      self.n_samples_, self.binned_, self.converged_)


def fit_ghd(components, **kwargs):
    x = np.asarray(components, dtype=float).ravel()
    if x.size < 10_000:
        warnings.warn(f"fitting a GHD to only {x.size} samples", RuntimeWarning, stacklevel=2)
    return GHDEstimator(**kwargs).fit(x).result()


def sample_ghd(n, b, xi, rng, df=3.0):
    """Rejection sampler for the unit-variance GHD with a Student-t envelope."""
    grid = np.linspace(0.0, 80.0, 16001)
    log_ratio = laws.ghd_logpdf(grid, b, xi) - stats.t.logpdf(grid, df)
    log_m = float(np.max(log_ratio)) + math.log(1.05)
    out = np.empty(0)
    while out.size < n:
        m = int(1.2 * (n - out.size) * math.exp(log_m)) + 16
        cand = rng.standard_t(df, size=m)
        u = rng.uniform(size=m)
        accept = np.log(u) < laws.ghd_logpdf(cand, b, xi) - stats.t.logpdf(cand, df) - log_m
        out = np.concatenate([out, cand[accept]])
    return out[:n]


def sample_ghd_mixture(n, b, xi, rng):
    """GHD draws as a normal variance mixture with generalized-inverse-Gaussian weights."""
    a, c = laws.ghd_params(b, xi)
    w = (c / a) * stats.geninvgauss.rvs(b, xi, size=n, random_state=rng)
    return np.sqrt(w) * rng.standard_normal(n)

