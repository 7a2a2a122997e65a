"""Tukey g / h / g-h transform families and related static distribution kernels.

The families are defined through their quantile functions

    g:    Q(u) = loc + scale * (exp(g*x_u) - 1) / g
    h:    Q(u) = loc + scale * x_u * exp(h * x_u^2 / 2)
    g-h:  Q(u) = loc + scale * ((exp(g*x_u) - 1) / g) * exp(h * x_u^2 / 2)

with x_u the standard normal quantile.  CDFs invert these maps exactly: the
g family in closed form, the h family through the principal Lambert W branch,
and the g-h family by safeguarded bisection/Newton in x_u.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.stats import t as _student_t

from .errors import ConvergenceError, DomainError
from .special import (INV_SQRT2PI, SQRT2PI, lambert_w0, norm_cdf, norm_pdf,
                      std_normal_quantile)

# |g| at or below this is treated as the analytic g -> 0 limit.
G_EPS = 1e-8
# quantile levels are snapped into this window; 0 and 1 map to -inf/+inf
U_CLIP = 1e-15
# bracket for the g-h CDF inversion in x_u
X_BRACKET = 40.0
H_SOFT_MAX = 0.1


@dataclass(frozen=True)
class TukeyParams:
    """Location/scale/skewness/kurtosis parameters of a Tukey family.

    ``h = 0`` selects the pure-g case; ``g = 0`` (or below the numerical
    threshold) the pure-h case.  Kurtosis values above ~0.1 produce very
    pronounced tails and trigger a warning, not an error.
    """

    loc: float = 0.0
    scale: float = 1.0
    g: float = 0.0
    h: float = 0.0

    def __post_init__(self):
        if not self.scale > 0.0:
            raise DomainError(f"scale must be positive, got {self.scale}")
        if self.h < 0.0:
            raise DomainError(
                f"h must be nonnegative, got {self.h}: the quantile function "
                "is no longer monotonically increasing for h < 0")
        if self.h > H_SOFT_MAX:
            warnings.warn(
                f"h = {self.h} exceeds {H_SOFT_MAX}; tails grow very quickly",
                stacklevel=2)

    @property
    def is_pure_g(self) -> bool:
        return self.h == 0.0

    @property
    def is_pure_h(self) -> bool:
        return abs(self.g) <= G_EPS


def _prep_u(u):
    arr = np.asarray(u, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr).astype(float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError("quantile level must lie in [0, 1]")
    return arr, scalar


def _finish(out, scalar):
    return float(out[0]) if scalar else out


def _x_from_u(u):
    """Normal quantile with levels snapped into the working window."""
    clipped = np.clip(u, U_CLIP, 1.0 - U_CLIP)
    x = std_normal_quantile(clipped)
    return np.atleast_1d(x)


# ---------------------------------------------------------------------------
# g family
# ---------------------------------------------------------------------------

def tukey_g_quantile(u, params: TukeyParams):
    """Quantile of the g-transform family; h in ``params`` is ignored."""
    arr, scalar = _prep_u(u)
    x = _x_from_u(arr)
    g = params.g
    if abs(g) <= G_EPS:
        core = x
    else:
        core = np.expm1(g * x) / g
    out = params.loc + params.scale * core
    out[arr == 0.0] = -np.inf
    out[arr == 1.0] = np.inf
    return _finish(out, scalar)


def tukey_g_cdf(z, params: TukeyParams):
    """Exact inverse of the g-transform quantile; 0/1 beyond the support."""
    arr = np.asarray(z, dtype=float)
    scalar = arr.ndim == 0
    s = (np.atleast_1d(arr) - params.loc) / params.scale
    g = params.g
    if abs(g) <= G_EPS:
        out = norm_cdf(s)
    else:
        w = g * s
        inside = w > -1.0
        x = np.full_like(s, np.nan)
        x[inside] = np.log1p(w[inside]) / g
        out = np.where(inside, norm_cdf(np.where(inside, x, 0.0)),
                       0.0 if g > 0 else 1.0)
    out = np.atleast_1d(out)
    return _finish(out, scalar)


def tukey_g_density(z, params: TukeyParams):
    """Density of the g-transform family; zero outside the support."""
    arr = np.asarray(z, dtype=float)
    scalar = arr.ndim == 0
    s = (np.atleast_1d(arr) - params.loc) / params.scale
    g = params.g
    if abs(g) <= G_EPS:
        out = norm_pdf(s) / params.scale
    else:
        w = g * s
        inside = w > -1.0
        x = np.where(inside, np.log1p(np.where(inside, w, 0.0)) / g, 0.0)
        # exp(-g x) = 1 / (1 + g s), which also carries the Jacobian
        dens = np.exp(-0.5 * x * x) * INV_SQRT2PI / (params.scale * (1.0 + w))
        out = np.where(inside, dens, 0.0)
    return _finish(np.atleast_1d(out), scalar)


# ---------------------------------------------------------------------------
# h family
# ---------------------------------------------------------------------------

def _require_h(params):
    if params.h < 0.0:
        raise DomainError("h must be nonnegative")


def tukey_h_quantile(u, params: TukeyParams):
    """Quantile of the h-transform family; g in ``params`` is ignored."""
    _require_h(params)
    arr, scalar = _prep_u(u)
    x = _x_from_u(arr)
    out = params.loc + params.scale * x * np.exp(0.5 * params.h * x * x)
    out[arr == 0.0] = -np.inf
    out[arr == 1.0] = np.inf
    return _finish(out, scalar)


def _h_x_from_z(s, h):
    """Solve x * exp(h x^2 / 2) = s through the Lambert W principal branch.

    For tiny h s^2 the ratio W(h s^2) / h loses precision (and denormalises),
    so the series W(v)/h = s^2 (1 - v + 1.5 v^2 - ...) takes over there.
    """
    if h == 0.0:
        return s
    s = np.asarray(s, dtype=float)
    v = h * s * s
    small = v < 1e-8
    with np.errstate(invalid="ignore", divide="ignore"):
        w_over_h = np.where(small, s * s * (1.0 - v + 1.5 * v * v),
                            lambert_w0(np.where(small, 1.0, v)) / h)
    return np.sign(s) * np.sqrt(w_over_h)


def tukey_h_cdf(z, params: TukeyParams):
    _require_h(params)
    arr = np.asarray(z, dtype=float)
    scalar = arr.ndim == 0
    s = (np.atleast_1d(arr) - params.loc) / params.scale
    x = _h_x_from_z(s, params.h)
    return _finish(np.atleast_1d(norm_cdf(x)), scalar)


def tukey_h_density(z, params: TukeyParams):
    _require_h(params)
    arr = np.asarray(z, dtype=float)
    scalar = arr.ndim == 0
    s = (np.atleast_1d(arr) - params.loc) / params.scale
    h = params.h
    x = _h_x_from_z(s, h)
    out = np.exp(-0.5 * (h + 1.0) * x * x) * INV_SQRT2PI / (
        params.scale * (1.0 + h * x * x))
    return _finish(np.atleast_1d(out), scalar)


# ---------------------------------------------------------------------------
# g-h family
# ---------------------------------------------------------------------------

def _gh_core(x, g, h):
    """k(x) = ((exp(g x) - 1)/g) * exp(h x^2/2), the standardised g-h map."""
    if abs(g) <= G_EPS:
        base = x
    else:
        base = np.expm1(g * x) / g
    return base * np.exp(0.5 * h * x * x)


def _gh_core_dx(x, g, h):
    """dk/dx, strictly positive for h >= 0."""
    e = np.exp(0.5 * h * x * x)
    if abs(g) <= G_EPS:
        return e * (1.0 + h * x * x)
    return e * (np.exp(g * x) + h * x * np.expm1(g * x) / g)


def _gh_core_dxx(x, g, h):
    """d^2k/dx^2."""
    e = np.exp(0.5 * h * x * x)
    if abs(g) <= G_EPS:
        return e * h * x * (3.0 + h * x * x)
    egx = np.exp(g * x)
    return e * (g * egx + 2.0 * h * x * egx + (h + h * h * x * x) * np.expm1(g * x) / g)


def tukey_gh_quantile(u, params: TukeyParams):
    """Quantile of the g-h family; dispatches to the pure sub-families."""
    if params.is_pure_g:
        return tukey_g_quantile(u, params)
    if params.is_pure_h:
        return tukey_h_quantile(u, params)
    arr, scalar = _prep_u(u)
    x = _x_from_u(arr)
    out = params.loc + params.scale * _gh_core(x, params.g, params.h)
    out[arr == 0.0] = -np.inf
    out[arr == 1.0] = np.inf
    return _finish(out, scalar)


def _gh_x_from_z(s, g, h):
    """Invert k(x) = s by bracketed bisection plus Newton refinement."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    k_lo = float(_gh_core(-X_BRACKET, g, h))
    k_hi = float(_gh_core(X_BRACKET, g, h))
    if np.any(s < k_lo) or np.any(s > k_hi):
        raise ConvergenceError(
            f"g-h inversion not bracketed within |x| <= {X_BRACKET}")
    lo = np.full_like(s, -X_BRACKET)
    hi = np.full_like(s, X_BRACKET)
    for _ in range(52):
        mid = 0.5 * (lo + hi)
        too_low = _gh_core(mid, g, h) < s
        lo = np.where(too_low, mid, lo)
        hi = np.where(too_low, hi, mid)
    x = 0.5 * (lo + hi)
    for _ in range(3):
        f = _gh_core(x, g, h) - s
        dp = _gh_core_dx(x, g, h)
        step = np.where(dp > 0.0, f / np.where(dp == 0.0, 1.0, dp), 0.0)
        x_new = np.clip(x - step, lo, hi)
        x = x_new
    return x


def tukey_gh_cdf(z, params: TukeyParams):
    """CDF of the g-h family via monotone root-finding in x_u.

    Raises
    ------
    ConvergenceError
        If z maps outside the image of |x_u| <= 40 (beyond roughly the
        1e-350 quantile).
    """
    if params.is_pure_g:
        return tukey_g_cdf(z, params)
    if params.is_pure_h:
        return tukey_h_cdf(z, params)
    arr = np.asarray(z, dtype=float)
    scalar = arr.ndim == 0
    s = (np.atleast_1d(arr) - params.loc) / params.scale
    x = _gh_x_from_z(s, params.g, params.h)
    return _finish(np.atleast_1d(norm_cdf(x)), scalar)


def tukey_gh_density(z, params: TukeyParams):
    """Density of the g-h family, phi(x_u) / (scale * k'(x_u))."""
    if params.is_pure_g:
        return tukey_g_density(z, params)
    if params.is_pure_h:
        return tukey_h_density(z, params)
    arr = np.asarray(z, dtype=float)
    scalar = arr.ndim == 0
    s = (np.atleast_1d(arr) - params.loc) / params.scale
    x = _gh_x_from_z(s, params.g, params.h)
    out = norm_pdf(x) / (params.scale * _gh_core_dx(x, params.g, params.h))
    return _finish(np.atleast_1d(out), scalar)


def _tukey_x_from_z(z, params: TukeyParams):
    """x_u for a value z of the (possibly shifted/scaled) family."""
    s = (np.asarray(z, dtype=float) - params.loc) / params.scale
    if params.is_pure_g:
        g = params.g
        if abs(g) <= G_EPS:
            return s
        return np.log1p(g * s) / g
    if params.is_pure_h:
        return _h_x_from_z(s, params.h)
    return _gh_x_from_z(s, params.g, params.h)


def tukey_density_derivative(z, params: TukeyParams):
    """Spatial derivative of the family density, by the chain rule in x_u.

    With k the standardised map, f(z) = phi(x)/(scale k'(x)) and

        f'(z) = -phi(x) (x k'(x) + k''(x)) / (scale^2 k'(x)^3).
    """
    arr = np.asarray(z, dtype=float)
    scalar = arr.ndim == 0
    x = np.atleast_1d(_tukey_x_from_z(np.atleast_1d(arr), params))
    g = 0.0 if params.is_pure_h else params.g
    h = 0.0 if params.is_pure_g else params.h
    kp = _gh_core_dx(x, g, h)
    kpp = _gh_core_dxx(x, g, h)
    out = -norm_pdf(x) * (x * kp + kpp) / (params.scale ** 2 * kp ** 3)
    return _finish(np.atleast_1d(out), scalar)


def tukey_support(params: TukeyParams):
    """Support interval of the family as (lo, hi) extended reals."""
    if params.is_pure_g and not params.is_pure_h:
        bound = params.loc - params.scale / params.g
        return (bound, np.inf) if params.g > 0 else (-np.inf, bound)
    return (-np.inf, np.inf)


# ---------------------------------------------------------------------------
# Univariate law container and constructors
# ---------------------------------------------------------------------------

@dataclass
class UnivariateLaw:
    """A static distribution as a (cdf, quantile, density) triple.

    ``pdf_prime`` (the spatial density derivative) is optional; when absent a
    central difference with step 1e-6 is used where it is needed.
    """

    cdf: Callable[[np.ndarray], np.ndarray]
    quantile: Callable[[np.ndarray], np.ndarray]
    pdf: Callable[[np.ndarray], np.ndarray]
    support: tuple = (-np.inf, np.inf)
    pdf_prime: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "law"
    tukey_params: Optional[TukeyParams] = None

    def density_derivative(self, z):
        if self.pdf_prime is not None:
            return self.pdf_prime(z)
        eps = 1e-6
        return (self.pdf(np.asarray(z) + eps) - self.pdf(np.asarray(z) - eps)) / (2 * eps)

    def normalization(self, tol=1e-10):
        """Integral of the density over the support (should be 1).

        Integrates piecewise between quantile anchors so that narrow bulks
        and heavy tails are both resolved.
        """
        lo, hi = self.support
        probs = np.array([1e-10, 1e-4, 0.05, 0.5, 0.95, 1 - 1e-4, 1 - 1e-10])
        anchors = [float(v) for v in np.asarray(self.quantile(probs), dtype=float)
                   if np.isfinite(v) and lo < v < hi]
        edges = [lo] + sorted(set(anchors)) + [hi]
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            val, _ = quad(lambda y: float(self.pdf(y)), a, b,
                          epsabs=tol, epsrel=tol, limit=400)
            total += val
        return total


def normal_law(mean=0.0, sd=1.0) -> UnivariateLaw:
    if sd <= 0:
        raise DomainError("sd must be positive")
    return UnivariateLaw(
        cdf=lambda y: norm_cdf((np.asarray(y, float) - mean) / sd),
        quantile=lambda u: mean + sd * std_normal_quantile(u),
        pdf=lambda y: norm_pdf((np.asarray(y, float) - mean) / sd) / sd,
        pdf_prime=lambda y: -((np.asarray(y, float) - mean) / sd ** 2)
        * norm_pdf((np.asarray(y, float) - mean) / sd) / sd,
        support=(-np.inf, np.inf),
        name=f"normal({mean},{sd})",
    )


def uniform_law(lo=0.0, hi=1.0) -> UnivariateLaw:
    if hi <= lo:
        raise DomainError("need lo < hi")
    width = hi - lo

    def cdf(y):
        return np.clip((np.asarray(y, float) - lo) / width, 0.0, 1.0)

    return UnivariateLaw(
        cdf=cdf,
        quantile=lambda u: lo + width * np.asarray(u, float),
        pdf=lambda y: np.where((np.asarray(y, float) >= lo) & (np.asarray(y, float) <= hi),
                               1.0 / width, 0.0),
        pdf_prime=lambda y: np.zeros_like(np.asarray(y, float)),
        support=(lo, hi),
        name=f"uniform({lo},{hi})",
    )


def pareto_law(scale: float, index: float) -> UnivariateLaw:
    """Pareto (Lomax form) with survival (scale/(scale+y))^index on y > 0."""
    if scale <= 0 or index <= 0:
        raise DomainError("scale and index must be positive")

    def cdf(y):
        y = np.asarray(y, float)
        return np.where(y > 0, 1.0 - (scale / (scale + np.maximum(y, 0.0))) ** index, 0.0)

    def quantile(u):
        u = np.asarray(u, float)
        return scale * ((1.0 - u) ** (-1.0 / index) - 1.0)

    def pdf(y):
        y = np.asarray(y, float)
        return np.where(y > 0, index * scale ** index / (scale + np.maximum(y, 0.0)) ** (index + 1.0), 0.0)

    def pdf_prime(y):
        y = np.asarray(y, float)
        return np.where(y > 0, -(index + 1.0) * index * scale ** index
                        / (scale + np.maximum(y, 0.0)) ** (index + 2.0), 0.0)

    return UnivariateLaw(cdf=cdf, quantile=quantile, pdf=pdf, pdf_prime=pdf_prime,
                         support=(0.0, np.inf), name=f"pareto({scale},{index})")


def student_t_law(df: float) -> UnivariateLaw:
    dist = _student_t(df)
    return UnivariateLaw(
        cdf=lambda y: dist.cdf(y), quantile=lambda u: dist.ppf(u),
        pdf=lambda y: dist.pdf(y), support=(-np.inf, np.inf),
        name=f"student_t({df})")


def tukey_law(params: TukeyParams) -> UnivariateLaw:
    """The g/h/g-h family wrapped as a UnivariateLaw with analytic f and f'."""
    return UnivariateLaw(
        cdf=lambda z: tukey_gh_cdf(z, params),
        quantile=lambda u: tukey_gh_quantile(u, params),
        pdf=lambda z: tukey_gh_density(z, params),
        pdf_prime=lambda z: tukey_density_derivative(z, params),
        support=tukey_support(params),
        name=f"tukey(loc={params.loc},scale={params.scale},g={params.g},h={params.h})",
        tukey_params=params,
    )


# ---------------------------------------------------------------------------
# Rank transmutation and elongation diagnostics
# ---------------------------------------------------------------------------

def rank_transmutation_map(f1: UnivariateLaw, f2: UnivariateLaw, u):
    """G(u) = F2(F1^-(u)), mapping [0,1] onto itself with 0 and 1 fixed."""
    arr, scalar = _prep_u(u)
    out = np.atleast_1d(np.asarray(f2.cdf(f1.quantile(np.clip(arr, U_CLIP, 1 - U_CLIP))),
                                   dtype=float))
    out[arr == 0.0] = 0.0
    out[arr == 1.0] = 1.0
    return _finish(out, scalar)


@dataclass
class ElongationReport:
    symmetric: bool
    near_identity: bool
    increasing: bool
    convex: bool
    details: dict

    @property
    def all_passed(self) -> bool:
        return self.symmetric and self.near_identity and self.increasing and self.convex


def elongation_check(transform: Callable[[np.ndarray], np.ndarray],
                     grid=None, near_zero_const=10.0) -> ElongationReport:
    """Diagnostic checks that T qualifies as an elongation transform.

    Checks, on a symmetric grid: T(w) = T(-w); the induced map w*T(w)
    perturbs w only at second order near 0; and T' > 0, T'' > 0 for w > 0
    via central differences.  Purely diagnostic, never raises.
    """
    if grid is None:
        grid = np.linspace(0.05, 3.0, 60)
    grid = np.asarray(grid, dtype=float)
    tw = np.asarray(transform(grid), dtype=float)
    tw_neg = np.asarray(transform(-grid), dtype=float)
    symmetric = bool(np.all(np.abs(tw - tw_neg) <= 1e-12 * np.maximum(1.0, np.abs(tw))))

    small = np.geomspace(1e-4, 0.1, 25)
    m = small * np.asarray(transform(small), dtype=float)
    near_identity = bool(np.all(np.abs(m - small) <= near_zero_const * small ** 2))

    eps = 1e-5
    d1 = (np.asarray(transform(grid + eps)) - np.asarray(transform(grid - eps))) / (2 * eps)
    d2 = (np.asarray(transform(grid + eps)) - 2.0 * tw + np.asarray(transform(grid - eps))) / eps ** 2
    increasing = bool(np.all(d1 > 0.0))
    convex = bool(np.all(d2 > 1e-10))

    return ElongationReport(
        symmetric=symmetric, near_identity=near_identity,
        increasing=increasing, convex=convex,
        details={"grid": grid, "T": tw, "T_prime": d1, "T_second": d2},
    )
