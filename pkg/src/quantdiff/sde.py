"""Random-level quantile diffusions: composite maps and SDE coefficients.

A composite map Z_t = Q_zeta(F(t, Y_t)) turns a driving diffusion into a
quantile diffusion.  Ito's formula gives its drift and volatility:

  false law F (with density f, spatial derivative f'):
      alpha = dF/dt / f_z + mu f / f_z + sigma^2 (f' f_z^2 - f^2 f_z') / (2 f_z^3)
  true law F_Y:
      alpha = sigma^2 f_Y'/f_z + f_Y (sigma^2)'/(2 f_z) - sigma^2 f_Y^2 f_z'/(2 f_z^3)
  both:
      sigma_tilde = sigma * f / f_z

with every law quantity evaluated at Q(t, F_zeta(z)) and f_z the target
density.  Closed forms for standardised Tukey g and h targets, the GBM/OU
specialisations, and their unified variance form are provided alongside,
plus boundary-limit diagnostics for the Lipschitz conditions.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .driving import TRUE_LAW, DiffusionSpec, MarginalLaw
from .errors import DomainError, SingularityError
from .special import SQRT2PI, norm_cdf
from .tukey import UnivariateLaw

# simulated g-family states are clipped so that g z + 1 >= this
G_STATE_FLOOR = 1e-12


class CoefficientPair(NamedTuple):
    alpha: np.ndarray
    sigma: np.ndarray


@dataclass
class CompositeMap:
    """Target quantile function composed with a (true or false) driver law.

    ``driver_law`` optionally overrides the analytic true law of the driver
    (e.g. a stationary marginal) where the measure-distortion machinery needs
    F_Y but the spec kind has no closed form.
    """

    target: UnivariateLaw
    law: MarginalLaw
    driver: DiffusionSpec
    t0: float = 1e-3
    driver_law: Optional[MarginalLaw] = None

    def __post_init__(self):
        if self.t0 <= 0:
            raise DomainError("t0 must be positive")

    @property
    def is_true_law(self) -> bool:
        return self.law.tag == TRUE_LAW

    def driver_true_law(self) -> MarginalLaw:
        if self.driver_law is not None:
            return self.driver_law
        from .driving import true_law
        return true_law(self.driver)


def random_level_value(cmap: CompositeMap, t: float, y):
    """Z = Q_target(F(t, y)): the quantile-diffusion value at driver state y."""
    if t < cmap.t0:
        raise DomainError(f"t={t} below the map's initial time t0={cmap.t0}")
    u = cmap.law.cdf(t, y)
    return cmap.target.quantile(u)


def _law_point(cmap: CompositeMap, t: float, z):
    """Common evaluations at y_hat = Q_law(t, F_target(z))."""
    z = np.asarray(z, dtype=float)
    u = np.asarray(cmap.target.cdf(z), dtype=float)
    fz = np.asarray(cmap.target.pdf(z), dtype=float)
    if np.any(fz <= 0.0) or np.any(~np.isfinite(fz)):
        raise SingularityError("target density vanishes at the requested state")
    fzp = np.asarray(cmap.target.density_derivative(z), dtype=float)
    y_hat = np.asarray(cmap.law.quantile(t, u), dtype=float)
    return u, fz, fzp, y_hat


def sde_coefficients_general(cmap: CompositeMap, t: float, z) -> CoefficientPair:
    """Drift and volatility of the quantile diffusion at (t, z).

    Dispatches on the law tag; the true-law variant needs no driver drift,
    the false-law variant needs the time derivative of F.
    """
    if t < cmap.t0:
        raise DomainError(f"t={t} below the map's initial time t0={cmap.t0}")
    scalar = np.ndim(z) == 0
    _, fz, fzp, y_hat = _law_point(cmap, t, np.atleast_1d(z))
    f = np.asarray(cmap.law.pdf(t, y_hat), dtype=float)
    fp = np.asarray(cmap.law.pdf_dy(t, y_hat), dtype=float)
    sig = np.asarray(cmap.driver.sigma(t, y_hat), dtype=float)
    sig2 = sig * sig

    if cmap.is_true_law:
        alpha = (sig2 * fp / fz
                 + f * np.asarray(cmap.driver.dsigma2_dy(t, y_hat), dtype=float) / (2.0 * fz)
                 - 0.5 * sig2 * f * f * fzp / fz ** 3)
    else:
        dFdt = np.asarray(cmap.law.dcdf_dt(t, y_hat), dtype=float)
        mu = np.asarray(cmap.driver.mu(t, y_hat), dtype=float)
        alpha = (dFdt / fz + mu * f / fz
                 + 0.5 * sig2 * (fp * fz * fz - f * f * fzp) / fz ** 3)
    sigma_tilde = sig * f / fz
    if scalar:
        return CoefficientPair(float(alpha[0]), float(sigma_tilde[0]))
    return CoefficientPair(alpha, sigma_tilde)


def _standardized_params(cmap: CompositeMap, family: str):
    p = cmap.target.tukey_params
    if p is None or p.loc != 0.0 or p.scale != 1.0:
        raise DomainError(
            f"closed-form {family} coefficients assume a standardised Tukey "
            "target (loc=0, scale=1); route general targets through "
            "sde_coefficients_general")
    return p


def g_sde_coefficients(cmap: CompositeMap, t: float, z) -> CoefficientPair:
    """Closed-form coefficients for a standardised Tukey-g target.

    The inverse map enters only through gz + 1 = exp(g x_u), so

        1 / f_target(z) = sqrt(2 pi) (gz+1) exp(ln(gz+1)^2 / (2 g^2)).

    The false-law drift keeps the dF/dt term, which vanishes for the
    time-homogeneous laws treated in the source derivation.
    """
    if t < cmap.t0:
        raise DomainError("t below t0")
    p = _standardized_params(cmap, "g")
    if p.is_pure_h or not p.is_pure_g:
        raise DomainError("g closed form needs g != 0 and h = 0")
    g = p.g
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    gz1 = g * z + 1.0
    if np.any(gz1 <= 0.0):
        raise DomainError("z at or beyond the g-family boundary -1/g")
    lg = np.log(gz1)
    x = lg / g
    u = norm_cdf(x)
    q_hat = np.asarray(cmap.law.quantile(t, u), dtype=float)
    f = np.asarray(cmap.law.pdf(t, q_hat), dtype=float)
    fp = np.asarray(cmap.law.pdf_dy(t, q_hat), dtype=float)
    sig = np.asarray(cmap.driver.sigma(t, q_hat), dtype=float)
    sig2 = sig * sig

    e_half = np.exp(lg * lg / (2.0 * g * g))
    inv_fz = SQRT2PI * gz1 * e_half
    bracket = g + lg / g
    second = sig2 * f * f * np.pi * gz1 * bracket * e_half * e_half

    if cmap.is_true_law:
        alpha = sig2 * fp * inv_fz + second
    else:
        mu = np.asarray(cmap.driver.mu(t, q_hat), dtype=float)
        dFdt = np.asarray(cmap.law.dcdf_dt(t, q_hat), dtype=float)
        alpha = (dFdt + mu * f + 0.5 * sig2 * fp) * inv_fz + second
    sigma_tilde = sig * f * inv_fz
    if scalar:
        return CoefficientPair(float(alpha[0]), float(sigma_tilde[0]))
    return CoefficientPair(alpha, sigma_tilde)


def h_sde_coefficients(cmap: CompositeMap, t: float, z) -> CoefficientPair:
    """Closed-form coefficients for a standardised Tukey-h target.

    Uses x_u = sqrt(2) erfinv(2 F_h(z) - 1) recovered by Lambert W, with

        1 / f_target(z) = sqrt(2 pi) (1 + h x^2) exp((h+1) x^2 / 2).

    At h = 0 this is the Gaussian-target specialisation.
    """
    if t < cmap.t0:
        raise DomainError("t below t0")
    p = _standardized_params(cmap, "h")
    if not p.is_pure_h:
        raise DomainError("h closed form needs g = 0")
    h = p.h
    from .tukey import _h_x_from_z

    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    x = _h_x_from_z(z, h)
    x2 = x * x
    u = norm_cdf(x)
    q_hat = np.asarray(cmap.law.quantile(t, u), dtype=float)
    f = np.asarray(cmap.law.pdf(t, q_hat), dtype=float)
    fp = np.asarray(cmap.law.pdf_dy(t, q_hat), dtype=float)
    sig = np.asarray(cmap.driver.sigma(t, q_hat), dtype=float)
    sig2 = sig * sig

    one_p = 1.0 + h * x2
    inv_fz = SQRT2PI * one_p * np.exp(0.5 * (h + 1.0) * x2)
    second = (sig2 * f * f * np.pi * x * ((h + 1.0) * one_p + 2.0 * h)
              * np.exp(0.5 * (h + 2.0) * x2))

    if cmap.is_true_law:
        alpha = sig2 * fp * inv_fz + second
    else:
        mu = np.asarray(cmap.driver.mu(t, q_hat), dtype=float)
        dFdt = np.asarray(cmap.law.dcdf_dt(t, q_hat), dtype=float)
        alpha = (dFdt + mu * f + 0.5 * sig2 * fp) * inv_fz + second
    sigma_tilde = sig * f * inv_fz
    if scalar:
        return CoefficientPair(float(alpha[0]), float(sigma_tilde[0]))
    return CoefficientPair(alpha, sigma_tilde)


# ---------------------------------------------------------------------------
# Named closed forms for the true-law g-family diffusions
# ---------------------------------------------------------------------------

def unified_g_coefficients(g: float, driver_var, sigma, z) -> CoefficientPair:
    """Both the GBM and OU g-diffusions in one form, keyed by Var(Y_t | Y_0):

        alpha = sigma^2/(2 Var) (g - ln(gz+1)/g)(gz+1)
        sigma_tilde = sigma/sqrt(Var) (gz+1)
    """
    driver_var = np.asarray(driver_var, dtype=float)
    if np.any(driver_var <= 0):
        raise DomainError("driver variance must be positive")
    z = np.asarray(z, dtype=float)
    gz1 = g * z + 1.0
    lg = np.log(gz1)
    alpha = sigma ** 2 / (2.0 * driver_var) * (g - lg / g) * gz1
    sigma_tilde = sigma / np.sqrt(driver_var) * gz1
    return CoefficientPair(alpha, sigma_tilde)


def gbm_g_coefficients(g: float, t, z) -> CoefficientPair:
    """True-law GBM (equivalently BM) Tukey-g diffusion coefficients:

        alpha = (g/(2t) - ln(gz+1)/(2 g t))(gz+1),  sigma_tilde = (gz+1)/sqrt(t)
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("t must be positive")
    z = np.asarray(z, dtype=float)
    gz1 = g * z + 1.0
    lg = np.log(gz1)
    alpha = (g / (2.0 * t) - lg / (2.0 * g * t)) * gz1
    return CoefficientPair(alpha, gz1 / np.sqrt(t))


def ou_g_coefficients(g: float, theta: float, t, z) -> CoefficientPair:
    """True-law OU Tukey-g diffusion coefficients."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("t must be positive")
    z = np.asarray(z, dtype=float)
    gz1 = g * z + 1.0
    lg = np.log(gz1)
    decay = 1.0 - np.exp(-2.0 * theta * t)
    alpha = (g * theta / decay - theta * lg / (g * decay)) * gz1
    sigma_tilde = np.sqrt(2.0 * theta) * gz1 / np.sqrt(decay)
    return CoefficientPair(alpha, sigma_tilde)


def g_state_clip(z, g: float):
    """Boundary policy: clip states so that g z + 1 >= 1e-12."""
    if g > 0:
        return np.maximum(z, (G_STATE_FLOOR - 1.0) / g)
    if g < 0:
        return np.minimum(z, (G_STATE_FLOOR - 1.0) / g)
    return z


# ---------------------------------------------------------------------------
# Lipschitz / regularity diagnostics
# ---------------------------------------------------------------------------

@dataclass
class LimitDiagnostic:
    name: str
    boundary: str
    grid: np.ndarray
    values: np.ndarray
    verdict: str


@dataclass
class LipschitzReport:
    family: str
    conditions: list
    drift_derivative: Optional[LimitDiagnostic] = None

    def table(self) -> str:
        lines = [f"Lipschitz diagnostics ({self.family} family)"]
        items = list(self.conditions)
        if self.drift_derivative is not None:
            items.append(self.drift_derivative)
        for c in items:
            tail = ", ".join(f"{v:.3e}" for v in c.values[-3:])
            lines.append(f"  {c.name:<12} {c.boundary:<12} last values [{tail}]  -> {c.verdict}")
        return "\n".join(lines)


def _verdict(values: np.ndarray) -> str:
    """Monotone-growth heuristic over the last 5 grid points.

    Sustained relative growth toward the boundary (without flattening out)
    reads as unbounded; this catches logarithmic divergence as well as
    exponential blow-up on the geometric evaluation grids used here.
    """
    full = np.abs(np.asarray(values, dtype=float))
    if np.any(~np.isfinite(full)):
        return "unbounded"
    v = full[-5:]
    rel_inc = np.diff(v) / np.maximum(v[:-1], 1e-300)
    growing = bool(np.all(rel_inc > 0.01))
    if growing and v[-1] > 5.0 * max(full[0], 1e-300):
        return "unbounded"
    if v[-1] <= 10.0 * max(np.median(v), 1e-300):
        return "bounded"
    return "indeterminate"


def _ftilde_bundle(cmap: CompositeMap, t: float, u):
    """f, f', f'' of the map law at Q(t, u)."""
    u = np.asarray(u, dtype=float)
    q = np.asarray(cmap.law.quantile(t, u), dtype=float)
    f = np.asarray(cmap.law.pdf(t, q), dtype=float)
    fp = np.asarray(cmap.law.pdf_dy(t, q), dtype=float)
    fpp = np.asarray(cmap.law.pdf_dyy(t, q), dtype=float)
    return f, fp, fpp


def lipschitz_diagnostics(cmap: CompositeMap, family: str, g: float = 0.5,
                          h: float = 0.1, t: Optional[float] = None) -> LipschitzReport:
    """Evaluate the boundary-limit expressions behind the Lipschitz conditions.

    For the g family eight limits (L1-L8) are scanned as z approaches -1/g
    and +infinity (mirrored for g < 0); for the h family ten limits (L1-L10)
    as the level x approaches 0 and 1.  Each condition reports its value
    sequence and a boundedness verdict; no exceptions are raised.
    """
    if t is None:
        t = max(1.0, cmap.t0)
    conditions = []
    if family == "g":
        if g == 0:
            raise DomainError("g family diagnostics need g != 0")
        # z-grids approaching the finite boundary and infinity
        eps = np.geomspace(1e-1, 1e-9, 12)
        if g > 0:
            z_b = (-1.0 + eps) / g
            z_inf = (np.geomspace(1e1, 1e9, 12) - 1.0) / g
            b_name, inf_name = "z->-1/g+", "z->inf"
        else:
            z_b = (-1.0 + eps) / g
            z_inf = (np.geomspace(1e1, 1e9, 12) - 1.0) / g
            b_name, inf_name = "z->-1/g-", "z->-inf"

        def g_limits(zs):
            # overflow to inf is an expected (and reported) outcome here
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                gz1 = g * zs + 1.0
                lg = np.log(gz1)
                u = norm_cdf(lg / g)
                f, fp, fpp = _ftilde_bundle(cmap, t, np.clip(u, 1e-15, 1 - 1e-15))
                e_half = np.exp(lg * lg / (2.0 * g * g))
                e_full = e_half * e_half
                bracket = g + lg / g
                poly = 2.0 * lg * lg / g ** 2 + 3.0 * lg + (g * g + 1.0)
                return {
                    "f*bracket*exp": f * bracket * e_half,
                    "f'/f": fp / f,
                    "f^2*poly*exp": f * f * poly * e_full,
                    "f''/f": fpp / f,
                }

        vals_b = g_limits(z_b)
        vals_i = g_limits(z_inf)
        for idx, key in enumerate(["f*bracket*exp", "f'/f", "f^2*poly*exp", "f''/f"]):
            conditions.append(LimitDiagnostic(
                name=f"L{2 * idx + 1}", boundary=b_name, grid=z_b,
                values=vals_b[key], verdict=_verdict(vals_b[key])))
            conditions.append(LimitDiagnostic(
                name=f"L{2 * idx + 2}", boundary=inf_name, grid=z_inf,
                values=vals_i[key], verdict=_verdict(vals_i[key])))
        drift = None
    elif family == "h":
        xs_lo = np.geomspace(1e-1, 1e-12, 12)
        xs_hi = 1.0 - xs_lo

        def h_limits(us):
            us = np.clip(us, 1e-15, 1 - 1e-15)
            f, fp, fpp = _ftilde_bundle(cmap, t, us)
            from .special import erfinv
            e = erfinv(2.0 * us - 1.0)
            ee = np.exp(e * e)
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                return {
                    "f'/f": fp / f,
                    "f*(h+1)*erf*exp": f * (h + 1.0) * e * ee,
                    "f''/f": fpp / f,
                    "f^2 e^6 exp/(1+2he^2)^2": f * f * e ** 6 * ee / (1.0 + 2.0 * h * e * e) ** 2,
                    "f^2 e^2 exp2": f * f * e * e * ee * ee,
                }

        vals_lo = h_limits(xs_lo)
        vals_hi = h_limits(xs_hi)
        keys = ["f'/f", "f*(h+1)*erf*exp", "f''/f",
                "f^2 e^6 exp/(1+2he^2)^2", "f^2 e^2 exp2"]
        for idx, key in enumerate(keys):
            conditions.append(LimitDiagnostic(
                name=f"L{2 * idx + 1}", boundary="x->0+", grid=xs_lo,
                values=vals_lo[key], verdict=_verdict(vals_lo[key])))
            conditions.append(LimitDiagnostic(
                name=f"L{2 * idx + 2}", boundary="x->1-", grid=xs_hi,
                values=vals_hi[key], verdict=_verdict(vals_hi[key])))
        drift = None
    else:
        raise DomainError(f"unknown family {family!r}; use 'g' or 'h'")

    # growth scan of the named true-law drift derivative (finite differences
    # would be redundant: the unified form differentiates in closed form)
    if family == "g":
        zs = (np.geomspace(1e1, 1e9, 12) - 1.0) / g
        gz1 = g * zs + 1.0
        dalpha = (1.0 / (2.0 * t)) * (g * g - np.log(gz1) - 1.0)
        drift = LimitDiagnostic(
            name="d(alpha)/dz", boundary="z->inf (unified/GBM form)", grid=zs,
            values=dalpha, verdict=_verdict(dalpha))

    return LipschitzReport(family=family, conditions=conditions,
                           drift_derivative=drift)
