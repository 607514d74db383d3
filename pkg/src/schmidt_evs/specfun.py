"""Special functions used by the closed-form laws.

Log-gamma and the modified Bessel function are thin validated wrappers over
:mod:`scipy.special`; the Gauss hypergeometric function is implemented here
for non-positive arguments, where the laws need it with very large ``|z|``.
"""

from __future__ import annotations

import decimal
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate as _integrate
from scipy import optimize, special

from .exceptions import ConvergenceError, DomainError

__all__ = [
    "QuadratureResult",
    "ln_gamma",
    "beta",
    "log_beta",
    "bessel_k",
    "log_bessel_k",
    "hyp2f1",
    "log_hyp2f1",
    "integrate",
]


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_estimate: float
    evaluations: int


def ln_gamma(x):
    """Natural log of the gamma function for positive arguments."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("ln_gamma is only defined here for x > 0")
    out = special.gammaln(x)
    return float(out) if out.ndim == 0 else out


def log_beta(a, b):
    return ln_gamma(a) + ln_gamma(b) - ln_gamma(np.add(a, b))


def beta(a, b):
    """Euler beta function B(a, b) = G(a) G(b) / G(a + b)."""
    return np.exp(log_beta(a, b))


def _check_bessel_args(nu, x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("bessel_k requires x > 0")
    if np.any(np.abs(nu) > 50):
        raise DomainError("bessel_k supports |nu| <= 50")
    return x


def _flush_order(nu):
    # K is even in nu with zero slope at 0; kv returns nan for subnormal orders
    return np.where(np.abs(nu) < 1e-200, 0.0, nu)


def bessel_k(nu, x, scaled=False):
    """Modified Bessel function of the second kind K_nu(x).

    With ``scaled=True`` returns ``exp(x) * K_nu(x)``, which stays finite for
    large ``x`` where the plain value underflows.
    """
    x = _check_bessel_args(nu, x)
    nu = _flush_order(nu)
    out = special.kve(nu, x) if scaled else special.kv(nu, x)
    return float(out) if np.ndim(out) == 0 else out


def log_bessel_k(nu, x):
    x = _check_bessel_args(nu, x)
    out = np.log(special.kve(_flush_order(nu), x)) - x
    return float(out) if np.ndim(out) == 0 else out


# --- Gauss hypergeometric function ------------------------------------------

_SERIES_CHUNK = 2048
_MAX_SERIES_TERMS = 400_000
# Above this Pfaff argument the power series needs ~30/(1-w) terms.
_W_SERIES_MAX = 0.995


def _is_nonpositive_integer(c):
    return c <= 0 and float(c).is_integer()


def _series(a, b, c, z, tol, max_terms=_MAX_SERIES_TERMS):
    """Power series of 2F1 for |z| < 1, summed in vectorized chunks.

    Sign-changing terms can cancel far below the largest term; when more than
    a few digits are lost the sum is redone in decimal arithmetic with enough
    guard digits.
    """
    total = 1.0
    term = 1.0
    biggest = 1.0
    start = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while start < max_terms:
            n = np.arange(start, start + _SERIES_CHUNK, dtype=float)
            ratios = (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z
            terms = term * np.cumprod(ratios)
            total += terms.sum()
            biggest = max(biggest, float(np.max(np.abs(terms))))
            term = terms[-1]
            if not math.isfinite(total) or not math.isfinite(biggest):
                return _series_decimal(a, b, c, z, tol, max_terms, 60)
            if term == 0.0:
                break
            r = abs(ratios[-1])
            # Ratios tend to |z| < 1 from one side; bound the tail geometrically.
            r_tail = max(r, abs(z))
            if r_tail < 1.0 and abs(term) * r_tail / (1.0 - r_tail) <= tol * abs(total):
                break
            start += _SERIES_CHUNK
        else:
            raise ConvergenceError(
                f"2F1 series did not converge in {max_terms} terms at z={z}",
                partial=total,
                residual=abs(term),
            )
    if biggest > _CANCELLATION_LIMIT * abs(total):
        lost = math.log10(biggest / abs(total)) if total != 0.0 else 300.0
        return _series_decimal(a, b, c, z, tol, max_terms, int(lost) + 40)
    return total


# Largest term over |sum| tolerated in double precision (about 3 digits lost).
_CANCELLATION_LIMIT = 1e3


def _series_decimal(a, b, c, z, tol, max_terms, digits):
    """The 2F1 series in decimal arithmetic; retries with more digits if needed."""
    with decimal.localcontext() as ctx:
        ctx.prec = digits
        ctx.Emax, ctx.Emin = 10 ** 6, -(10 ** 6)
        da, db, dc, dz = (decimal.Decimal(v) for v in (a, b, c, z))
        dtol = decimal.Decimal(tol)
        total = decimal.Decimal(1)
        term = decimal.Decimal(1)
        biggest = decimal.Decimal(1)
        for n in range(max_terms):
            ratio = (da + n) * (db + n) / ((dc + n) * (n + 1)) * dz
            term *= ratio
            total += term
            biggest = max(biggest, abs(term))
            if term == 0:
                break
            r_tail = max(abs(ratio), abs(dz))
            if r_tail < 1 and abs(term) * r_tail / (1 - r_tail) <= dtol * abs(total):
                break
        else:
            raise ConvergenceError(
                f"2F1 series did not converge in {max_terms} terms at z={z}",
                partial=float(total),
                residual=float(abs(term)),
            )
        if total == 0:
            return 0.0
        lost = float((biggest / abs(total)).log10())
    if lost > digits - 20:
        if digits > 4000:
            raise ConvergenceError(f"2F1 series cancels beyond {digits} digits at z={z}",
                                   partial=float(total), residual=float(abs(term)))
        return _series_decimal(a, b, c, z, tol, max_terms, int(lost) + 40)
    return float(total)


def _log_euler_integral(a, b, c, z):
    """log 2F1 from Euler's integral, valid for c > b > 0 and z <= 0.

    Substituting t = exp(s) keeps the integrand smooth even when |z| is huge,
    and working relative to the peak keeps it in range.
    """

    def g(s):
        t = math.exp(s)
        return b * s + (c - b - 1.0) * math.log1p(-t) - a * math.log1p(-z * t)

    # Locate the peak of g on (-inf, 0).
    lo = -60.0 - math.log1p(-z)
    res = optimize.minimize_scalar(lambda s: -g(s), bounds=(lo, -1e-12), method="bounded",
                                   options={"xatol": 1e-10})
    s_peak = float(res.x)
    g_peak = g(s_peak)
    # g is concave-ish in s; walk out until the integrand is negligible.
    left = s_peak - 1.0
    while g(left) - g_peak > -80.0 and left > lo - 200.0:
        left -= 2.0 * (s_peak - left)
    right_pts = []
    step = 0.5
    s = s_peak
    while s + step < 0.0:
        s += step
        right_pts.append(s)
        if g(s) - g_peak < -80.0:
            break
        step *= 1.5
    hi = right_pts[-1] if right_pts and g(right_pts[-1]) - g_peak < -80.0 else 0.0
    pts = [p for p in [s_peak] + right_pts if left < p < hi]
    with warnings.catch_warnings():
        # roundoff near the integrable t -> 1 endpoint; the estimate is still good
        warnings.simplefilter("ignore", _integrate.IntegrationWarning)
        val, _err = _integrate.quad(
            lambda s: math.exp(g(s) - g_peak),
            left,
            hi,
            points=pts or None,
            epsabs=0.0,
            epsrel=1e-12,
            limit=400,
        )
    return (
        special.gammaln(c) - special.gammaln(b) - special.gammaln(c - b)
        + g_peak + math.log(val)
    )


def _validate_2f1(a, b, c, z):
    if _is_nonpositive_integer(c):
        raise DomainError("2F1 undefined for c a non-positive integer")
    if z > 0:
        raise DomainError("hyp2f1 is implemented for z <= 0 only")


def _pfaff_params(a, b, c, z, positive_terms=False):
    """Map z < 0 to w = z/(z-1) in (0, 1); returns (log prefactor, a', b', c', w).

    The smaller of (a, b) is pulled out of the prefactor so the transformed
    series has c' - a' - b' = |a - b| >= 0. With ``positive_terms`` the larger
    one is pulled instead when c lies between them: the series then has no
    sign changes, where the default would alternate and cancel.
    """
    w = z / (z - 1.0)
    log1mz = math.log1p(-z)
    pull_b = a >= b
    if positive_terms and min(a, b) > 0 and c - max(a, b) < 0 <= c - min(a, b):
        pull_b = not pull_b
    if pull_b:
        return -b * log1mz, c - a, b, c, w
    return -a * log1mz, a, c - b, c, w


def hyp2f1(a, b, c, z, tol=1e-15):
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z <= 0."""
    a, b, c, z = float(a), float(b), float(c), float(z)
    _validate_2f1(a, b, c, z)
    if z == 0.0:
        return 1.0
    # the direct series alternates for z < 0; Pfaff's w = z/(z-1) gives terms
    # of one sign after finitely many steps
    log_pre, a2, b2, c2, w = _pfaff_params(a, b, c, z, positive_terms=True)
    if w <= _W_SERIES_MAX:
        return math.exp(log_pre) * _series(a2, b2, c2, w, tol)
    sign, logf = _log_hyp2f1_large(a, b, c, z, tol)
    return sign * math.exp(logf)


def _log_hyp2f1_large(a, b, c, z, tol):
    # Euler's integral needs c > p > 0; with c - p < 1 its integrand is singular
    # at the end point, where the 1/z expansion is the better route.
    for p, q in ((b, a), (a, b)):
        if c >= p + 1 and p > 0:
            return 1.0, _log_euler_integral(q, p, c, z)
    log_pre, a2, b2, c2, w = _pfaff_params(a, b, c, z)
    if w <= _W_SERIES_MAX or min(a, b) <= 0:
        s = _series(a2, b2, c2, w, tol)
        return math.copysign(1.0, s), log_pre + math.log(abs(s))
    return _log_hyp2f1_inverse_z(a, b, c, z, tol)


def _log_gamma_ratio(num, den):
    """(sign, log|prod Gamma(num) / prod Gamma(den)|); sign 0 on a pole of a denominator."""
    sign, logv = 1.0, 0.0
    for x in den:
        if _is_nonpositive_integer(x):
            return 0.0, -math.inf
        sign *= special.gammasgn(x)
        logv -= special.gammaln(x)
    for x in num:
        sign *= special.gammasgn(x)
        logv += special.gammaln(x)
    return sign, logv


def _inverse_z_terms(a, b, c, z, tol):
    # 2F1(a,b;c;z) = G(c)G(b-a)/(G(b)G(c-a)) (-z)^-a 2F1(a, a-c+1; a-b+1; 1/z) + (a <-> b)
    out = []
    for p, q in ((a, b), (b, a)):
        sign, logv = _log_gamma_ratio((c, q - p), (q, c - p))
        if sign == 0.0:
            continue
        s = _series(p, p - c + 1.0, p - q + 1.0, 1.0 / z, tol)
        out.append((sign * math.copysign(1.0, s), logv - p * math.log(-z) + math.log(abs(s))))
    return out


def _combine_logs(terms):
    if not terms:
        return 0.0, -math.inf
    ref = max(t[1] for t in terms)
    v = sum(sg * math.exp(lg - ref) for sg, lg in terms)
    return math.copysign(1.0, v), ref + math.log(abs(v))


def _log_hyp2f1_inverse_z(a, b, c, z, tol, h=8e-3, levels=4):
    """Large |z| through the 1/z connection formula.

    When a - b is (close to) an integer the two terms have cancelling poles;
    there b is shifted by +-h, averaged (even in h), and the average is
    Richardson-extrapolated to h = 0.
    """
    d = a - b
    if abs(d - round(d)) > 2 * h:
        return _combine_logs(_inverse_z_terms(a, b, c, z, tol))

    def sym(step):
        vals = [_combine_logs(_inverse_z_terms(a, b + s, c, z, tol)) for s in (step, -step)]
        return 0.5 * sum(sg * math.exp(lg) for sg, lg in vals)

    table = [sym(h / 2 ** k) for k in range(levels)]
    for j in range(1, levels):
        f = 4.0 ** j
        table = [(f * table[i + 1] - table[i]) / (f - 1.0) for i in range(len(table) - 1)]
    v = table[0]
    return math.copysign(1.0, v), math.log(abs(v))


def log_hyp2f1(a, b, c, z, tol=1e-15):
    """log |2F1(a, b; c; z)| for z <= 0, avoiding overflow of the prefactor."""
    a, b, c, z = float(a), float(b), float(c), float(z)
    _validate_2f1(a, b, c, z)
    if z == 0.0:
        return 0.0
    log_pre, a2, b2, c2, w = _pfaff_params(a, b, c, z, positive_terms=True)
    if w <= _W_SERIES_MAX:
        return log_pre + math.log(abs(_series(a2, b2, c2, w, tol)))
    return _log_hyp2f1_large(a, b, c, z, tol)[1]


def integrate(f, lo, hi, tol=1e-10, points=None, limit=500):
    """Adaptive Gauss-Kronrod quadrature of ``f`` over ``[lo, hi]``.

    Integrable endpoint singularities are fine since the rule never samples
    the endpoints. Raises :class:`ConvergenceError` (with the partial result)
    when the subdivision limit is hit before reaching ``tol``.
    """
    kwargs = dict(epsabs=tol, epsrel=tol, limit=limit, full_output=1)
    if points is not None and np.isfinite(lo) and np.isfinite(hi):
        kwargs["points"] = [p for p in points if lo < p < hi]
    out = _integrate.quad(f, lo, hi, **kwargs)
    value, err, info = out[0], out[1], out[2]
    ier = out[3] if len(out) > 3 else 0
    if ier != 0 and err > tol * max(1.0, abs(value)):
        raise ConvergenceError(
            f"quadrature did not converge on [{lo}, {hi}]: {out[-1] if len(out) > 3 else ''}",
            partial=value,
            residual=err,
        )
    return QuadratureResult(float(value), float(err), int(info["neval"]))
