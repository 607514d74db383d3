"""Closed-form reference densities and moments.

All densities accept scalars or arrays. Laws with huge normalizing constants
(the smallest-Schmidt-eigenvalue law in particular) are evaluated in log space.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import special
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from . import specfun
from .exceptions import DomainError, SingularPointError

__all__ = [
    "LawId",
    "LawCurve",
    "law_curve",
    "mp_density",
    "mp_cdf",
    "mp_moment",
    "porter_thomas",
    "porter_thomas_cdf",
    "eigvec_marginal",
    "ghd_params",
    "ghd_pdf",
    "ghd_logpdf",
    "gev_pdf",
    "gev_logpdf",
    "gev_cdf",
    "lmin_density",
    "lmin_log_density",
    "lmin_moment",
    "johnstone_center_scale",
    "tracy_widom_f1_pdf",
    "tracy_widom_f1_cdf",
    "normal_pdf",
    "normal_cdf",
    "ALPHA_CRITICAL",
]

#: Localized-to-ergodic transition of the ultrametric ensemble.
ALPHA_CRITICAL = 1.0 / math.sqrt(2.0)


def _scalar_or_array(out):
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


# --- Marchenko-Pastur ---------------------------------------------------------


def mp_density(x):
    """Marchenko-Pastur density for equal subsystem dimensions, support [0, 4]."""
    x = np.asarray(x, dtype=float)
    if np.any(x == 0.0):
        raise SingularPointError("MP density diverges at x = 0")
    inside = (x > 0) & (x <= 4)
    xs = np.where(inside, x, 1.0)
    out = np.where(inside, np.sqrt(np.clip(4.0 - xs, 0.0, None) / xs) / (2 * np.pi), 0.0)
    return _scalar_or_array(out)


def mp_cdf(x):
    # Substituting x = 4 sin^2(t) gives the antiderivative (2/pi)(t + sin t cos t).
    x = np.clip(np.asarray(x, dtype=float), 0.0, 4.0)
    t = np.arcsin(np.sqrt(x) / 2.0)
    return _scalar_or_array((2.0 / np.pi) * (t + np.sqrt(x * (4.0 - x)) / 4.0))


def mp_moment(k):
    """k-th moment of the MP law, 4^(k+1/2) B(k+1/2, 3/2) / pi (Catalan numbers)."""
    if k < 0 or int(k) != k:
        raise DomainError("moment order must be a non-negative integer")
    log_val = (k + 0.5) * math.log(4.0) + specfun.log_beta(k + 0.5, 1.5) - math.log(math.pi)
    return math.exp(log_val)


# --- Eigenvector statistics -----------------------------------------------------


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return _scalar_or_array(np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi))


def normal_cdf(x):
    return _scalar_or_array(special.ndtr(np.asarray(x, dtype=float)))


def porter_thomas(y):
    """Porter-Thomas (chi-squared, one degree of freedom) intensity density."""
    y = np.asarray(y, dtype=float)
    if np.any(~(y > 0)):
        raise DomainError("Porter-Thomas density needs y > 0")
    return _scalar_or_array(np.exp(-y / 2.0) / np.sqrt(2 * np.pi * y))


def porter_thomas_cdf(y):
    y = np.clip(np.asarray(y, dtype=float), 0.0, None)
    return _scalar_or_array(special.erf(np.sqrt(y / 2.0)))


def eigvec_marginal(x, n):
    """Marginal density of one component of a uniform random unit vector in R^n."""
    if n < 3:
        raise DomainError("marginal defined here for n >= 3")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) >= 1):
        raise DomainError("component must satisfy |x| < 1")
    log_norm = specfun.ln_gamma(n / 2.0) - specfun.ln_gamma((n - 1) / 2.0) - 0.5 * math.log(math.pi)
    return _scalar_or_array(np.exp(log_norm + 0.5 * (n - 3) * np.log1p(-x * x)))


# --- Generalized hyperbolic -------------------------------------------------------


def ghd_params(b, xi):
    """(a, c) of the unit-variance GHD parametrized by (b, xi)."""
    if not xi > 0:
        raise DomainError("xi must be positive")
    a = math.sqrt(xi * math.exp(specfun.log_bessel_k(b + 1.0, xi) - specfun.log_bessel_k(b, xi)))
    return a, xi / a


def _ghd_log_kernel(x, b, a, c):
    r = np.sqrt(np.asarray(x, dtype=float) ** 2 + c * c)
    nu = b - 0.5
    return nu * np.log(r) + np.log(specfun.bessel_k(nu, a * r, scaled=True)) - a * r


@lru_cache(maxsize=4096)
def _ghd_log_norm(b, xi):
    a, c = ghd_params(b, xi)
    shift = float(_ghd_log_kernel(0.0, b, a, c))
    res = specfun.integrate(
        lambda t: math.exp(float(_ghd_log_kernel(t, b, a, c)) - shift),
        0.0,
        np.inf,
        tol=1e-12,
    )
    return shift + math.log(2.0 * res.value)


def ghd_logpdf(x, b, xi):
    a, c = ghd_params(b, xi)
    return _scalar_or_array(_ghd_log_kernel(x, b, a, c) - _ghd_log_norm(float(b), float(xi)))


def ghd_pdf(x, b, xi):
    """Symmetric generalized hyperbolic density with unit variance.

    The kernel is normalized by quadrature rather than by its closed-form
    constant, so the result has unit mass regardless of how the constant is
    written.
    """
    return _scalar_or_array(np.exp(ghd_logpdf(x, b, xi)))


# --- Generalized extreme value --------------------------------------------------

_GUMBEL_EPS = 1e-10


def gev_logpdf(y, shape):
    """Log density of the standardized GEV law in the 1 - shape*y convention.

    shape > 0 has a finite upper end point (Weibull), shape < 0 a heavy upper
    tail (Frechet), shape = 0 is Gumbel. Outside the support returns -inf.
    """
    y = np.asarray(y, dtype=float)
    if abs(shape) < _GUMBEL_EPS:
        with np.errstate(over="ignore"):
            return _scalar_or_array(-np.exp(-y) - y)
    arg = 1.0 - shape * y
    ok = arg > 0
    la = np.log1p(np.where(ok, -shape * y, 0.0))
    t = la / shape
    out = np.where(ok, -np.exp(t) + t - la, -np.inf)
    return _scalar_or_array(out)


def gev_pdf(y, shape):
    return _scalar_or_array(np.exp(gev_logpdf(y, shape)))


def gev_cdf(y, shape):
    y = np.asarray(y, dtype=float)
    if abs(shape) < _GUMBEL_EPS:
        return _scalar_or_array(np.exp(-np.exp(-y)))
    arg = 1.0 - shape * y
    ok = arg > 0
    t = np.log1p(np.where(ok, -shape * y, 0.0)) / shape
    # Beyond the end point the cdf is 1 for shape > 0 and 0 for shape < 0.
    outside = 1.0 if shape > 0 else 0.0
    return _scalar_or_array(np.where(ok, np.exp(-np.exp(t)), outside))


# --- Smallest Schmidt eigenvalue --------------------------------------------------


@lru_cache(maxsize=256)
def _lmin_log_const(D):
    D = float(D)
    return (
        math.log(D) + specfun.ln_gamma(D) + specfun.ln_gamma(D * D / 2.0)
        - (D - 1.0) * math.log(2.0)
        - specfun.ln_gamma(D / 2.0)
        - specfun.ln_gamma((D * D + D - 2.0) / 2.0)
    )


def _lmin_log_density_scalar(lam, D):
    if not 0.0 < lam < 1.0 / D:
        return -math.inf
    a = (D + 2.0) / 2.0
    b = (D - 1.0) / 2.0
    c = (D * D + D - 2.0) / 2.0
    z = -(1.0 - D * lam) / lam
    return (
        _lmin_log_const(D)
        - 0.5 * D * math.log(lam)
        + 0.5 * (D * D + D - 4.0) * math.log1p(-D * lam)
        + specfun.log_hyp2f1(a, b, c, z)
    )


def _check_dim(D):
    if int(D) != D or D < 2:
        raise DomainError("dimension D must be an integer >= 2")
    return int(D)


def lmin_log_density(lam, D):
    D = _check_dim(D)
    lam = np.asarray(lam, dtype=float)
    out = np.array([_lmin_log_density_scalar(float(v), D) for v in lam.ravel()])
    return _scalar_or_array(out.reshape(lam.shape))


def lmin_density(lam, D):
    """Exact density of the smallest eigenvalue of a D x D trace-one real Wishart matrix."""
    return _scalar_or_array(np.exp(lmin_log_density(lam, D)))


def lmin_moment(k, D):
    """Closed-form k-th moment of the smallest Schmidt eigenvalue."""
    D = _check_dim(D)
    if k < 0 or int(k) != k:
        raise DomainError("moment order must be a non-negative integer")
    lg = specfun.ln_gamma
    log_pre = (
        lg(k + 2.0) + lg(k + 0.5) + lg(D + 1.0) + lg(D * D / 2.0)
        - (D - 1) * math.log(2.0)
        - lg(D / 2.0)
        - lg(D * D / 2.0 + k)
        - lg((D + 3.0) / 2.0 + k)
    )
    log_f = specfun.log_hyp2f1(k + 2.0, k + 0.5, (D + 3.0) / 2.0 + k, 1.0 - D)
    return math.exp(log_pre + log_f)


# --- Largest eigenvalue ------------------------------------------------------------


def johnstone_center_scale(D):
    """Asymptotic (center, scale) of the largest eigenvalue of a trace-one D x D Wishart."""
    if D < 2:
        raise DomainError("D must be >= 2")
    return 4.0 / D, 2.0 ** (4.0 / 3.0) * float(D) ** (-5.0 / 3.0)


_TW_S_MIN, _TW_S_MAX, _TW_STEP = -10.0, 6.0, 1e-2


@dataclass(frozen=True)
class _TracyWidomTable:
    s: np.ndarray
    cdf: np.ndarray
    pdf: np.ndarray
    pdf_spline: CubicSpline
    cdf_spline: CubicSpline


def _tw_rhs(s, y):
    q, p, v, u, w = y
    return [p, s * q + 2.0 * q ** 3, -q * q, -v, -q]


def _airy_tail_integrals(s0):
    ai, aip, _, _ = special.airy(s0)
    v0 = aip * aip - s0 * ai * ai
    u0 = specfun.integrate(lambda x: (x - s0) * special.airy(x)[0] ** 2, s0, s0 + 40.0, tol=1e-16).value
    w0 = specfun.integrate(lambda x: special.airy(x)[0], s0, s0 + 40.0, tol=1e-16).value
    return ai, aip, v0, u0, w0


@lru_cache(maxsize=1)
def _tw_table():
    # Hastings-McLeod solution of Painleve II, q ~ Ai(s) at the right end.
    n = int(round((_TW_S_MAX - _TW_S_MIN) / _TW_STEP))
    grid = np.linspace(_TW_S_MAX, _TW_S_MIN, n + 1)
    sol = solve_ivp(
        _tw_rhs,
        (_TW_S_MAX, _TW_S_MIN),
        list(_airy_tail_integrals(_TW_S_MAX)),
        method="DOP853",
        rtol=1e-13,
        atol=1e-300,
        t_eval=grid,
    )
    q, _p, v, u, w = sol.y
    cdf = np.exp(-0.5 * (u + w))
    pdf = 0.5 * cdf * (v + q)
    s = sol.t[::-1]
    cdf, pdf = cdf[::-1], pdf[::-1]
    return _TracyWidomTable(s, cdf, pdf, CubicSpline(s, pdf), CubicSpline(s, cdf))


def _tw_right_tail(s):
    # Nonlinear term is negligible past the table end, so q = Ai there.
    s = np.asarray(s, dtype=float)
    ai, aip, _, _ = special.airy(s)
    v = aip * aip - s * ai * ai
    w = np.array([_airy_tail_integrals(float(x))[4] for x in s.ravel()]).reshape(s.shape)
    cdf = np.exp(-0.5 * w)
    return cdf, 0.5 * cdf * (v + ai)


def _tw_left_tail(s):
    # log F1(s) ~ -|s|^3/24 - |s|^{3/2}/(3 sqrt 2) - log|s|/16, matched at the table edge.
    tab = _tw_table()

    def log_f(x):
        m = -x
        return -(m ** 3) / 24.0 - m ** 1.5 / (3.0 * math.sqrt(2.0)) - math.log(m) / 16.0

    s = np.asarray(s, dtype=float)
    offset = math.log(tab.cdf[0]) - log_f(tab.s[0])
    m = -s
    cdf = np.exp(-(m ** 3) / 24.0 - m ** 1.5 / (3.0 * math.sqrt(2.0)) - np.log(m) / 16.0 + offset)
    dlog = m ** 2 / 8.0 + np.sqrt(m) / (2.0 * math.sqrt(2.0)) + 1.0 / (16.0 * m)
    return cdf, cdf * dlog


def _tw_eval(s, which, return_flag):
    tab = _tw_table()
    s = np.asarray(s, dtype=float)
    flat = s.ravel()
    out = np.empty_like(flat)
    lo = flat < tab.s[0]
    hi = flat > tab.s[-1]
    mid = ~(lo | hi)
    spline = tab.pdf_spline if which == "pdf" else tab.cdf_spline
    out[mid] = spline(flat[mid])
    idx = 1 if which == "pdf" else 0
    if lo.any():
        out[lo] = _tw_left_tail(flat[lo])[idx]
    if hi.any():
        out[hi] = _tw_right_tail(flat[hi])[idx]
    if which == "pdf":
        out = np.clip(out, 0.0, None)
    else:
        out = np.clip(out, 0.0, 1.0)
    out = _scalar_or_array(out.reshape(s.shape))
    if return_flag:
        return out, _scalar_or_array(mid.reshape(s.shape)).astype(bool) if s.ndim else bool(mid[0])
    return out


def tracy_widom_f1_pdf(s, return_flag=False):
    """Density of the beta = 1 Tracy-Widom law.

    Tabulated on [-10, 6] from the Hastings-McLeod solution of Painleve II and
    cubic-interpolated; outside the table tail asymptotics are used. With
    ``return_flag=True`` also returns a mask that is False where the reduced
    accuracy tail formula was used.
    """
    return _tw_eval(s, "pdf", return_flag)


def tracy_widom_f1_cdf(s, return_flag=False):
    return _tw_eval(s, "cdf", return_flag)


# --- Curves --------------------------------------------------------------------------


class LawId(str, Enum):
    MP = "mp"
    PORTER_THOMAS = "porter-thomas"
    NORMAL = "normal"
    EIGVEC_MARGINAL = "eigvec-marginal"
    GHD = "ghd"
    GEV = "gev"
    LMIN = "lmin"
    TRACY_WIDOM_F1 = "tw1"


@dataclass
class LawCurve:
    """A law tabulated on a grid, e.g. for overlays and CSV export."""

    grid: np.ndarray
    density: np.ndarray
    law_id: LawId
    parameters: dict = field(default_factory=dict)

    def label(self):
        if not self.parameters:
            return self.law_id.value
        params = ", ".join(f"{k}={v:.4g}" for k, v in self.parameters.items())
        return f"{self.law_id.value} ({params})"

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["grid", "density"])
        for g, d in zip(self.grid, self.density):
            writer.writerow([repr(float(g)), repr(float(d))])
        return buf.getvalue()


def law_curve(law_id, grid, **params):
    """Tabulate ``law_id`` on ``grid``; location/scale apply to GEV only."""
    law_id = LawId(law_id)
    grid = np.asarray(grid, dtype=float)
    if law_id is LawId.MP:
        g = np.where(grid == 0, np.nextafter(0.0, 1.0), grid)
        dens = mp_density(g)
    elif law_id is LawId.PORTER_THOMAS:
        dens = porter_thomas(np.where(grid <= 0, np.nextafter(0.0, 1.0), grid))
    elif law_id is LawId.NORMAL:
        dens = normal_pdf(grid)
    elif law_id is LawId.EIGVEC_MARGINAL:
        # tabulation on the closed interval: endpoints take the limiting value
        inside = np.abs(grid) < 1
        edge = 0.5 if params["n"] == 3 else 0.0
        dens = np.where(np.abs(grid) == 1, edge, 0.0)
        dens[inside] = eigvec_marginal(grid[inside], params["n"])
    elif law_id is LawId.GHD:
        dens = ghd_pdf(grid, params["b"], params["xi"])
    elif law_id is LawId.GEV:
        loc = params.get("location", 0.0)
        scale = params.get("scale", 1.0)
        dens = gev_pdf((grid - loc) / scale, params["shape"]) / scale
    elif law_id is LawId.LMIN:
        dens = lmin_density(grid, params["D"])
    else:
        dens = tracy_widom_f1_pdf(grid)
    return LawCurve(grid, np.atleast_1d(np.asarray(dens, dtype=float)), law_id, dict(params))
