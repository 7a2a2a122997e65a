"""Scalar special functions: normal quantile, inverse erf, Lambert W, generalised inverse.

The normal quantile is computed from a rational approximation refined by one
Halley step on the forward CDF, giving relative error below 1e-13 across
(1e-15, 1 - 1e-15).  The Lambert W principal branch uses Halley iteration to
1e-13.  Both exist here (rather than as scipy calls) so the Monte Carlo
kernels can share the same arithmetic in nopython mode.
"""
from __future__ import annotations

import numpy as np
from scipy.special import erfc as _erfc

from .errors import DomainError

SQRT2 = np.sqrt(2.0)
SQRT2PI = np.sqrt(2.0 * np.pi)
INV_SQRT2PI = 1.0 / SQRT2PI

# Acklam's rational approximation for the inverse normal CDF.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def norm_cdf(x):
    """Standard normal CDF, accurate in both tails."""
    x = np.asarray(x, dtype=float)
    out = 0.5 * _erfc(-x / SQRT2)
    return out if out.ndim else float(out)


def norm_pdf(x):
    x = np.asarray(x, dtype=float)
    out = INV_SQRT2PI * np.exp(-0.5 * x * x)
    return out if out.ndim else float(out)


def _acklam_lower(p):
    """Initial rational estimate of the normal quantile for p in (0, 0.5]."""
    x = np.empty_like(p)
    lo = p < _P_LOW
    mid = ~lo

    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        num = ((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        x[mid] = q * num / den
    if np.any(lo):
        q = np.sqrt(-2.0 * np.log(p[lo]))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        x[lo] = num / den
    return x


def _quantile_lower(p):
    """Normal quantile for p in (0, 0.5], Acklam plus one Halley step.

    In this half, norm_cdf(x) = 0.5*erfc(-x/sqrt(2)) carries full relative
    precision, so the refinement reaches ~1e-15.
    """
    x = _acklam_lower(p)
    err = 0.5 * _erfc(-x / SQRT2) - p
    pdf = INV_SQRT2PI * np.exp(-0.5 * x * x)
    delta = err / pdf
    return x - delta / (1.0 + 0.5 * x * delta)


def std_normal_quantile(u):
    """Quantile of the standard normal distribution.

    Parameters
    ----------
    u : float or array_like
        Probability level in [0, 1].  Endpoints map to -inf/+inf.

    Returns
    -------
    float or ndarray
        x with ``norm_cdf(x) = u``, relative error below 1e-13 on
        (1e-15, 1 - 1e-15).

    Raises
    ------
    DomainError
        If u lies outside [0, 1].
    """
    arr = np.asarray(u, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr).copy()
    if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError("quantile level must lie in [0, 1]")

    out = np.empty_like(arr)
    zero = arr == 0.0
    one = arr == 1.0
    inner = ~(zero | one)
    out[zero] = -np.inf
    out[one] = np.inf

    if np.any(inner):
        v = arr[inner]
        # upper half goes through the lower tail by symmetry: 1 - v is exact
        # for v >= 0.5, and erfc keeps full relative precision there
        p = np.where(v <= 0.5, v, 1.0 - v)
        x = _quantile_lower(p)
        out[inner] = np.where(v <= 0.5, x, -x)
    return float(out[0]) if scalar else out


def erfinv(y):
    """Inverse error function on (-1, 1); +-inf at the endpoints."""
    arr = np.asarray(y, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr).astype(float)
    if np.any(np.abs(arr) > 1.0):
        raise DomainError("erfinv argument must lie in [-1, 1]")
    out = np.empty_like(arr)
    small = np.abs(arr) < 1e-8
    if np.any(small):
        t = arr[small]
        # series keeps full precision where (1+y)/2 would round to 0.5
        out[small] = 0.5 * np.sqrt(np.pi) * t * (1.0 + np.pi * t * t / 12.0)
    rest = ~small
    if np.any(rest):
        # evaluate on the negative side, where (1 + y)/2 is exact in doubles
        y_neg = -np.abs(arr[rest])
        x = std_normal_quantile((y_neg + 1.0) / 2.0) / SQRT2
        out[rest] = np.sign(arr[rest]) * (-x)
    return float(out[0]) if scalar else out


def lambert_w0(v):
    """Principal-branch Lambert W for v >= 0, via Halley iteration.

    Solves ``w * exp(w) = v`` to absolute/relative tolerance 1e-13.
    """
    arr = np.asarray(v, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr).astype(float)
    if np.any(arr < 0.0):
        raise DomainError("lambert_w0 implemented for nonnegative arguments")

    w = np.where(arr < 1.0, arr * (1.0 - arr), np.log1p(arr))
    big = arr > np.e
    if np.any(big):
        l1 = np.log(arr[big])
        l2 = np.log(l1)
        w[big] = l1 - l2 + l2 / l1
    for _ in range(6):
        ew = np.exp(w)
        f = w * ew - arr
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        # w = 0 solves v = 0 exactly; guard the 0/0 there
        step = np.where(denom != 0.0, f / np.where(denom == 0.0, 1.0, denom), 0.0)
        w = w - step
    return float(w[0]) if scalar else w


def generalized_inverse(f, y, lo=-1.0, hi=1.0, tol=1e-13, max_expand=2100):
    """Generalised inverse inf{x : f(x) >= y} of a nondecreasing function.

    Follows the convention inf(empty set) = +inf; returns -inf when every x
    qualifies.  The initial bracket [lo, hi] is expanded geometrically until
    it straddles the level set.
    """
    y = float(y)
    lo = float(lo)
    hi = float(hi)
    for _ in range(max_expand):
        if f(hi) >= y:
            break
        hi = hi * 2.0 if hi > 0 else 1.0
        if hi > 8.9e307:
            return np.inf
    else:  # pragma: no cover - max_expand is generous
        return np.inf
    for _ in range(max_expand):
        if f(lo) < y:
            break
        lo = lo * 2.0 if lo < 0 else -1.0
        if lo < -8.9e307:
            return -np.inf
    else:  # pragma: no cover
        return -np.inf

    while hi - lo > tol * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) >= y:
            hi = mid
        else:
            lo = mid
    return hi
