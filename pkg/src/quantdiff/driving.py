"""Driving diffusions with analytic marginal and transition laws.

Supported drivers: drifted Brownian motion, geometric Brownian motion, and
Ornstein-Uhlenbeck, each with closed-form Gaussian or lognormal laws carrying
the density, its first two spatial derivatives, and the time derivative of
the CDF.  Custom drift/volatility specs are accepted for coefficient
evaluation but supply no analytic law.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError
from .special import norm_cdf, norm_pdf, std_normal_quantile
from .tukey import UnivariateLaw

BM_DRIFT = "bm_drift"
GBM = "gbm"
OU = "ou"
CUSTOM = "custom"

TRUE_LAW = "true_law"
FALSE_LAW = "false_law"


@dataclass(frozen=True)
class DiffusionSpec:
    """Scalar driving diffusion dY = mu(t,Y) dt + sigma(t,Y) dW."""

    kind: str
    y0: float
    mu: Callable[[float, np.ndarray], np.ndarray]
    sigma: Callable[[float, np.ndarray], np.ndarray]
    dsigma2_dy: Callable[[float, np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)

    def support(self):
        return (0.0, np.inf) if self.kind == GBM else (-np.inf, np.inf)


def bm_drift(mu: float = 0.0, sigma: float = 1.0, y0: float = 0.0) -> DiffusionSpec:
    if sigma < 0:
        raise DomainError("sigma must be nonnegative")
    return DiffusionSpec(
        kind=BM_DRIFT, y0=y0,
        mu=lambda t, y: np.full_like(np.asarray(y, float), mu),
        sigma=lambda t, y: np.full_like(np.asarray(y, float), sigma),
        dsigma2_dy=lambda t, y: np.zeros_like(np.asarray(y, float)),
        params={"mu": mu, "sigma": sigma})


def gbm(mu: float = 0.0, sigma: float = 1.0, y0: float = 1.0) -> DiffusionSpec:
    if y0 <= 0:
        raise DomainError("GBM requires y0 > 0")
    if sigma < 0:
        raise DomainError("sigma must be nonnegative")
    return DiffusionSpec(
        kind=GBM, y0=y0,
        mu=lambda t, y: mu * np.asarray(y, float),
        sigma=lambda t, y: sigma * np.asarray(y, float),
        dsigma2_dy=lambda t, y: 2.0 * sigma ** 2 * np.asarray(y, float),
        params={"mu": mu, "sigma": sigma})


def ou(theta: float = 1.0, level: float = 0.0, sigma: float = 1.0,
       y0: float = 0.0) -> DiffusionSpec:
    if theta <= 0 or sigma <= 0:
        raise DomainError("OU requires theta > 0 and sigma > 0")
    return DiffusionSpec(
        kind=OU, y0=y0,
        mu=lambda t, y: theta * (level - np.asarray(y, float)),
        sigma=lambda t, y: np.full_like(np.asarray(y, float), sigma),
        dsigma2_dy=lambda t, y: np.zeros_like(np.asarray(y, float)),
        params={"theta": theta, "level": level, "sigma": sigma})


def custom(mu, sigma, y0, dsigma2_dy=None, params=None) -> DiffusionSpec:
    """Custom coefficient functions; dsigma2_dy defaults to a central difference."""
    if dsigma2_dy is None:
        def dsigma2_dy(t, y, _s=sigma):
            eps = 1e-6
            return (np.asarray(_s(t, np.asarray(y) + eps)) ** 2
                    - np.asarray(_s(t, np.asarray(y) - eps)) ** 2) / (2 * eps)
    return DiffusionSpec(kind=CUSTOM, y0=y0, mu=mu, sigma=sigma,
                         dsigma2_dy=dsigma2_dy, params=params or {})


# ---------------------------------------------------------------------------
# Time-indexed laws
# ---------------------------------------------------------------------------

class MarginalLaw:
    """Time-indexed CDF/quantile/density family F(t, .), Q(t, .), f(t, .).

    Carries the spatial density derivatives and the time derivative of the
    CDF, all needed by the quantile-diffusion SDE coefficients.  ``tag``
    records whether this is the driver's true law or a user-chosen false law.
    """

    tag = FALSE_LAW

    def cdf(self, t, y):
        raise NotImplementedError

    def quantile(self, t, u):
        raise NotImplementedError

    def pdf(self, t, y):
        raise NotImplementedError

    def pdf_dy(self, t, y):
        eps = 1e-6
        return (self.pdf(t, np.asarray(y) + eps) - self.pdf(t, np.asarray(y) - eps)) / (2 * eps)

    def pdf_dyy(self, t, y):
        eps = 1e-5
        y = np.asarray(y, float)
        return (self.pdf(t, y + eps) - 2.0 * self.pdf(t, y) + self.pdf(t, y - eps)) / eps ** 2

    def dcdf_dt(self, t, y):
        raise NotImplementedError

    def support(self, t):
        return (-np.inf, np.inf)


class GaussianMarginalLaw(MarginalLaw):
    """Normal law with time-varying mean m(t) and variance v(t)."""

    def __init__(self, mean_fn, var_fn, dmean_dt, dvar_dt, tag=TRUE_LAW):
        self._m = mean_fn
        self._v = var_fn
        self._mp = dmean_dt
        self._vp = dvar_dt
        self.tag = tag

    def _sd(self, t):
        v = self._v(t)
        if v <= 0:
            raise DomainError(f"law degenerate at t={t}: variance {v}")
        return np.sqrt(v)

    def cdf(self, t, y):
        return norm_cdf((np.asarray(y, float) - self._m(t)) / self._sd(t))

    def quantile(self, t, u):
        return self._m(t) + self._sd(t) * std_normal_quantile(u)

    def pdf(self, t, y):
        sd = self._sd(t)
        return norm_pdf((np.asarray(y, float) - self._m(t)) / sd) / sd

    def pdf_dy(self, t, y):
        v = self._v(t)
        y = np.asarray(y, float)
        return -((y - self._m(t)) / v) * self.pdf(t, y)

    def pdf_dyy(self, t, y):
        v = self._v(t)
        y = np.asarray(y, float)
        w = (y - self._m(t))
        return ((w * w / v - 1.0) / v) * self.pdf(t, y)

    def dcdf_dt(self, t, y):
        sd = self._sd(t)
        w = (np.asarray(y, float) - self._m(t)) / sd
        return -norm_pdf(w) * (self._mp(t) / sd + w * self._vp(t) / (2.0 * self._v(t)))


class LognormalMarginalLaw(MarginalLaw):
    """Lognormal law: ln Y ~ N(m(t), v(t)) on (0, inf)."""

    def __init__(self, mean_fn, var_fn, dmean_dt, dvar_dt, tag=TRUE_LAW):
        self._m = mean_fn
        self._v = var_fn
        self._mp = dmean_dt
        self._vp = dvar_dt
        self.tag = tag

    def _sd(self, t):
        v = self._v(t)
        if v <= 0:
            raise DomainError(f"law degenerate at t={t}: variance {v}")
        return np.sqrt(v)

    def _w(self, t, y):
        y = np.asarray(y, float)
        if np.any(y <= 0):
            raise DomainError("lognormal law evaluated at y <= 0")
        return (np.log(y) - self._m(t)) / self._sd(t)

    def cdf(self, t, y):
        return norm_cdf(self._w(t, y))

    def quantile(self, t, u):
        return np.exp(self._m(t) + self._sd(t) * std_normal_quantile(u))

    def pdf(self, t, y):
        y = np.asarray(y, float)
        return norm_pdf(self._w(t, y)) / (y * self._sd(t))

    def pdf_dy(self, t, y):
        y = np.asarray(y, float)
        w = self._w(t, y)
        return -self.pdf(t, y) * (w / self._sd(t) + 1.0) / y

    def pdf_dyy(self, t, y):
        y = np.asarray(y, float)
        w = self._w(t, y)
        sd = self._sd(t)
        a = w / sd + 1.0
        return self.pdf(t, y) * (a * a + w / sd + 1.0 - 1.0 / sd ** 2) / y ** 2

    def dcdf_dt(self, t, y):
        sd = self._sd(t)
        w = self._w(t, y)
        return -norm_pdf(w) * (self._mp(t) / sd + w * self._vp(t) / (2.0 * self._v(t)))

    def support(self, t):
        return (0.0, np.inf)


class StationaryLaw(MarginalLaw):
    """Time-homogeneous (false) law wrapping a static UnivariateLaw."""

    def __init__(self, law: UnivariateLaw):
        self._law = law
        self.tag = FALSE_LAW

    def cdf(self, t, y):
        return self._law.cdf(y)

    def quantile(self, t, u):
        return self._law.quantile(u)

    def pdf(self, t, y):
        return self._law.pdf(y)

    def pdf_dy(self, t, y):
        return self._law.density_derivative(y)

    def dcdf_dt(self, t, y):
        return np.zeros_like(np.asarray(y, float))

    def support(self, t):
        return self._law.support


class NormalShiftLaw(MarginalLaw):
    """False law F(t, y) = Phi((y - loc + drift*t) / scale).

    With drift = 0 and loc = lambda this is the N(lambda, scale^2) CDF used
    in the Wang replication; with loc = 0 and drift = gamma it is the moving
    false law behind the shifted Tukey-g pricing process.
    """

    def __init__(self, loc=0.0, scale=1.0, drift=0.0):
        if scale <= 0:
            raise DomainError("scale must be positive")
        self.loc = loc
        self.scale = scale
        self.drift = drift
        self.tag = FALSE_LAW

    def _w(self, t, y):
        return (np.asarray(y, float) - self.loc + self.drift * t) / self.scale

    def cdf(self, t, y):
        return norm_cdf(self._w(t, y))

    def quantile(self, t, u):
        return self.loc - self.drift * t + self.scale * std_normal_quantile(u)

    def pdf(self, t, y):
        return norm_pdf(self._w(t, y)) / self.scale

    def pdf_dy(self, t, y):
        return -(self._w(t, y) / self.scale) * self.pdf(t, y)

    def pdf_dyy(self, t, y):
        w = self._w(t, y)
        return ((w * w - 1.0) / self.scale ** 2) * self.pdf(t, y)

    def dcdf_dt(self, t, y):
        return norm_pdf(self._w(t, y)) * self.drift / self.scale


def true_law(spec: DiffusionSpec, s: float = 0.0, y_s: Optional[float] = None) -> MarginalLaw:
    """The analytic law of the driver started from (s, y_s); marginal when s=0.

    Raises
    ------
    DomainError
        For CUSTOM specs (no closed form), for y_s outside the support, or
        when later evaluated at t <= s (zero elapsed time).
    """
    if y_s is None:
        y_s = spec.y0
    p = spec.params

    def elapsed(t):
        dt = t - s
        if dt <= 0.0:
            raise DomainError(f"law requested at t={t} <= start time s={s}")
        return dt

    if spec.kind == BM_DRIFT:
        return GaussianMarginalLaw(
            mean_fn=lambda t: y_s + p["mu"] * elapsed(t),
            var_fn=lambda t: p["sigma"] ** 2 * elapsed(t),
            dmean_dt=lambda t: p["mu"],
            dvar_dt=lambda t: p["sigma"] ** 2,
            tag=TRUE_LAW)
    if spec.kind == GBM:
        if y_s <= 0:
            raise DomainError("GBM transition start must be positive")
        drift = p["mu"] - 0.5 * p["sigma"] ** 2
        return LognormalMarginalLaw(
            mean_fn=lambda t: np.log(y_s) + drift * elapsed(t),
            var_fn=lambda t: p["sigma"] ** 2 * elapsed(t),
            dmean_dt=lambda t: drift,
            dvar_dt=lambda t: p["sigma"] ** 2,
            tag=TRUE_LAW)
    if spec.kind == OU:
        th, lv, sg = p["theta"], p["level"], p["sigma"]
        return GaussianMarginalLaw(
            mean_fn=lambda t: lv + (y_s - lv) * np.exp(-th * elapsed(t)),
            var_fn=lambda t: sg ** 2 * (1.0 - np.exp(-2.0 * th * elapsed(t))) / (2.0 * th),
            dmean_dt=lambda t: -th * (y_s - lv) * np.exp(-th * elapsed(t)),
            dvar_dt=lambda t: sg ** 2 * np.exp(-2.0 * th * elapsed(t)),
            tag=TRUE_LAW)
    raise DomainError(f"no analytic law for driver kind {spec.kind!r}")


@dataclass
class LawSlice:
    """F(t, .), Q(t, .), f(t, .) and derivatives frozen at one time."""

    t: float
    tag: str
    cdf: Callable
    quantile: Callable
    pdf: Callable
    pdf_dy: Callable
    dcdf_dt: Callable
    support: tuple


def _slice(law: MarginalLaw, t: float) -> LawSlice:
    return LawSlice(
        t=t, tag=law.tag,
        cdf=lambda y: law.cdf(t, y),
        quantile=lambda u: law.quantile(t, u),
        pdf=lambda y: law.pdf(t, y),
        pdf_dy=lambda y: law.pdf_dy(t, y),
        dcdf_dt=lambda y: law.dcdf_dt(t, y),
        support=law.support(t))


def marginal_law(spec: DiffusionSpec, t: float) -> LawSlice:
    """Marginal law of the driver at time t > 0."""
    if t <= 0:
        raise DomainError("marginal law undefined at t = 0: mass sits on y0")
    return _slice(true_law(spec), t)


def transition_law(spec: DiffusionSpec, s: float, y_s: float, t: float) -> LawSlice:
    """Law of Y_t conditioned on Y_s = y_s, 0 <= s < t."""
    if not 0 <= s < t:
        raise DomainError("need 0 <= s < t")
    return _slice(true_law(spec, s=s, y_s=y_s), t)


def fokker_planck_dtF(spec: DiffusionSpec, law: MarginalLaw, t: float, y):
    """Time derivative of the true-law CDF via the Fokker-Planck flux.

    dF/dt = -mu f + (sigma^2 f' + f d(sigma^2)/dy) / 2, all at (t, y).
    """
    if law.tag != TRUE_LAW:
        raise DomainError("Fokker-Planck identity applies to the true law only")
    y = np.asarray(y, float)
    f = law.pdf(t, y)
    fp = law.pdf_dy(t, y)
    return (-spec.mu(t, y) * f
            + 0.5 * (spec.sigma(t, y) ** 2 * fp + f * spec.dsigma2_dy(t, y)))
