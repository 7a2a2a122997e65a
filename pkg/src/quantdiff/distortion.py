"""Distortion operators, quantile-induced measure distortion, and layer pricing.

Classical operators (Wang one/two-factor and generalised, proportional
hazard, Esscher, and the distribution-implied operator of the Godin type)
sit next to the distortion induced by a quantile diffusion: the distorted law
of the driver is, by construction, the law of the quantile process itself.
Layer premiums integrate distorted survival functions over monetary layers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .driving import MarginalLaw, true_law
from .errors import ConvergenceError, DivergenceError, DomainError
from .mc import _philox
from .sde import CompositeMap, random_level_value
from .special import norm_cdf, norm_pdf, std_normal_quantile
from .tukey import UnivariateLaw, student_t_law


def _unit_interval(u):
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0) or np.any(np.isnan(arr)):
        raise DomainError("distortion operators act on [0, 1]")
    return arr


def wang1(u, lam: float):
    """One-factor Wang distortion Phi(Phi^-(u) + lambda); fixes 0 and 1."""
    arr = _unit_interval(u)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.empty_like(arr)
    inner = (arr > 0.0) & (arr < 1.0)
    out[arr == 0.0] = 0.0
    out[arr == 1.0] = 1.0
    if np.any(inner):
        out[inner] = norm_cdf(std_normal_quantile(arr[inner]) + lam)
    return float(out[0]) if scalar else out


def wang2(u, lam: float, k: float):
    """Two-factor Wang distortion T_k(Phi^-(u) + lambda), Student-t tails."""
    if k < 1:
        raise DomainError("degrees of freedom must be >= 1")
    arr = _unit_interval(u)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    tdist = student_t_law(k)
    out = np.empty_like(arr)
    inner = (arr > 0.0) & (arr < 1.0)
    out[arr == 0.0] = 0.0
    out[arr == 1.0] = 1.0
    if np.any(inner):
        out[inner] = tdist.cdf(std_normal_quantile(arr[inner]) + lam)
    return float(out[0]) if scalar else out


def wang_gen(u, lam: float, v_values, v_probs):
    """Generalised Wang distortion for a finite-support positive mixer V.

    With G the CDF of phi/V (phi standard normal independent of V),

        nu(u) = E_V[ Phi(G^-(u) V + lambda) ] = sum_j p_j Phi(G^-(u) v_j + lambda).

    A Dirac mass at V = 1 recovers the one-factor operator exactly.
    """
    v = np.asarray(v_values, dtype=float)
    p = np.asarray(v_probs, dtype=float)
    if np.any(v <= 0):
        raise DomainError("mixer support must be positive")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise DomainError("mixer probabilities must be a distribution")

    def g_cdf(x):
        # P(phi / V <= x) = sum_j p_j Phi(x v_j) for V > 0
        return float(np.sum(p * norm_cdf(np.asarray(x) * v)))

    arr = _unit_interval(u)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.empty_like(arr)
    lo_b, hi_b = -50.0 / v.min(), 50.0 / v.min()
    for i, ui in enumerate(arr):
        if ui == 0.0:
            out[i] = 0.0
        elif ui == 1.0:
            out[i] = 1.0
        else:
            x = brentq(lambda s: g_cdf(s) - ui, lo_b, hi_b, xtol=1e-14, rtol=8.9e-16)
            out[i] = float(np.sum(p * norm_cdf(x * v + lam)))
    return float(out[0]) if scalar else out


def ph_transform(s, r: float):
    """Proportional-hazard transform of a survival probability: s -> s^r."""
    if r <= 0:
        raise DomainError("PH index must be positive")
    arr = _unit_interval(s)
    out = arr ** r
    return float(out) if np.ndim(s) == 0 else out


def esscher_cdf(x, law: UnivariateLaw, lam: float, tol: float = 1e-9):
    """Exponentially tilted CDF  int_{-inf}^x e^{lam y} dF(y) / int e^{lam y} dF(y).

    Raises
    ------
    DivergenceError
        When the tilting integral fails to converge (for example a Pareto
        law with lam > 0).
    """
    lo, hi = law.support

    def log_integrand(y):
        f = float(law.pdf(y))
        if f <= 0.0:
            return -np.inf
        return lam * y + math.log(f)

    def integrand(y):
        v = log_integrand(y)
        return math.exp(v) if v < 700.0 else np.inf

    if lam != 0.0:
        # reject heavy tails before quad wanders off: the tilted log-density
        # must decay along the unbounded tail in the direction of the tilt
        probe_sign = 1.0 if lam > 0 else -1.0
        edge = hi if lam > 0 else lo
        if np.isinf(edge):
            qs = law.quantile(np.array([0.999, 0.9999, 0.99999]))
            probes = np.abs(np.asarray(qs, dtype=float)) * probe_sign
            vals = [log_integrand(float(v)) for v in probes]
            if vals[-1] > vals[0]:
                raise DivergenceError(
                    f"esscher tilt e^({lam} y) diverges against {law.name}")

    # integrate piecewise between quantile anchors so narrow tilted bulks
    # cannot slip through the infinite-interval transform
    anchors = [float(v) for v in np.asarray(
        law.quantile(np.array([1e-10, 0.01, 0.25, 0.5, 0.75, 0.99, 1 - 1e-10])),
        dtype=float) if np.isfinite(v) and lo < v < hi]
    if lam != 0.0:
        # rough location of the tilted mode, clipped into the support
        shift = sorted(anchors)[-1] if lam > 0 else sorted(anchors)[0]
        anchors.append(min(max(shift + lam, lo + 1e-12), hi))

    def piecewise(a, b):
        pts = sorted({p for p in anchors if a < p < b} | {a, b},
                     key=lambda v: (np.isinf(v), v))
        total = 0.0
        edges = [a] + [p for p in pts if a < p < b] + [b]
        for left, right in zip(edges[:-1], edges[1:]):
            val, _ = quad(integrand, left, right, epsabs=1e-14, epsrel=tol,
                          limit=400)
            total += val
        return total

    denom = piecewise(lo, hi)
    if not np.isfinite(denom) or denom <= 0:
        raise DivergenceError("esscher normalisation integral did not converge")
    if x <= lo:
        return 0.0
    num = piecewise(lo, min(x, hi))
    return min(max(num / denom, 0.0), 1.0)


def godin_distortion(u, law_p: UnivariateLaw, law_q: UnivariateLaw):
    """Distortion implied by a risk with P-law ``law_p`` and Q-law ``law_q``:

        g(u) = bar F_Q(bar F_P^-(u)) = 1 - F_Q(Q_P(1 - u)).
    """
    arr = _unit_interval(u)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.empty_like(arr)
    inner = (arr > 0.0) & (arr < 1.0)
    out[arr == 0.0] = 0.0
    out[arr == 1.0] = 1.0
    if np.any(inner):
        out[inner] = 1.0 - np.asarray(
            law_q.cdf(law_p.quantile(1.0 - arr[inner])), dtype=float)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Quantile-induced distortion
# ---------------------------------------------------------------------------

def _same_interval(a, b) -> bool:
    return all((np.isinf(x) and np.isinf(y) and np.sign(x) == np.sign(y))
               or np.isclose(x, y) for x, y in zip(a, b))


def _check_measure_domains(cmap: CompositeMap):
    """The measure-flow interpretation needs D_driver = D_target."""
    if not _same_interval(cmap.target.support, cmap.driver.support()):
        raise DomainError(
            f"target support {cmap.target.support} differs from driver support "
            f"{cmap.driver.support()}: the distorted measure is not equivalent")


def quantile_induced_cdf(cmap: CompositeMap, t: float, y,
                         s: Optional[float] = None, y_s=None):
    """Distorted law of the driver: F under P^Z equals the law of Z under P.

    Marginal form:      F_Z(t, y)        = F_Y(t, Q_law(t, F_target(y)))
    Conditional form:   F_Z(t, y | s, y_s)
                        = F_Y(t, Q_law(t, F_target(y)) | s, Q_law(s, F_target(y_s)))

    The conditional form (where y_s lives on the target domain) enforces the
    domain equivalence D_driver = D_target; the marginal CDF identity holds
    on the target support without it.
    """
    u = np.asarray(cmap.target.cdf(y), dtype=float)
    if s is None:
        y_hat = cmap.law.quantile(t, np.clip(u, 1e-15, 1 - 1e-15))
        out = np.asarray(cmap.driver_true_law().cdf(t, y_hat), dtype=float)
    else:
        if y_s is None:
            raise DomainError("conditional form needs the state y_s at time s")
        if not cmap.t0 <= s < t:
            raise DomainError("need t0 <= s < t")
        _check_measure_domains(cmap)
        u_s = float(np.asarray(cmap.target.cdf(y_s), dtype=float))
        y_hat = cmap.law.quantile(t, np.clip(u, 1e-15, 1 - 1e-15))
        y_hat_s = float(cmap.law.quantile(s, np.clip(u_s, 1e-15, 1 - 1e-15)))
        out = np.asarray(true_law(cmap.driver, s=s, y_s=y_hat_s).cdf(t, y_hat),
                         dtype=float)
    out = np.where(u <= 0.0, 0.0, np.where(u >= 1.0, 1.0, out))
    return float(out) if np.ndim(y) == 0 else out


def gh_bm_transition_cdf(z, s: float, z_s: float, t: float, target: UnivariateLaw):
    """Closed transition law of a true-law g-h quantile diffusion over drifted BM:

        F(t, z | s, z_s) = Phi((sqrt(t) x_t - sqrt(s) x_s) / sqrt(t - s)),

    with x = Phi^-(F_gh(.)); the BM drift and start value cancel.
    """
    if not 0 < s < t:
        raise DomainError("need 0 < s < t")
    x_t = std_normal_quantile(np.clip(np.asarray(target.cdf(z), dtype=float),
                                      1e-15, 1 - 1e-15))
    x_s = float(std_normal_quantile(np.clip(float(np.asarray(target.cdf(z_s))),
                                            1e-15, 1 - 1e-15)))
    out = norm_cdf((np.sqrt(t) * x_t - np.sqrt(s) * x_s) / np.sqrt(t - s))
    return float(out) if np.ndim(z) == 0 else out


def likelihood_ratio(cmap: CompositeMap, s: float, y_s: float, t: float, y):
    """Conditional likelihood ratio dF^{P^Z} / dF^P of transition laws at (t, y).

    Computed as a ratio of transition densities; +inf is returned where the
    base density vanishes but the distorted one does not.
    """
    if not cmap.t0 <= s < t:
        raise DomainError("need t0 <= s < t")
    _check_measure_domains(cmap)
    y = np.asarray(y, dtype=float)
    u = np.asarray(cmap.target.cdf(y), dtype=float)
    u_c = np.clip(u, 1e-15, 1 - 1e-15)
    f_target = np.asarray(cmap.target.pdf(y), dtype=float)
    y_hat = np.asarray(cmap.law.quantile(t, u_c), dtype=float)
    u_s = float(np.asarray(cmap.target.cdf(y_s), dtype=float))
    y_hat_s = float(cmap.law.quantile(s, min(max(u_s, 1e-15), 1 - 1e-15)))

    trans = true_law(cmap.driver, s=s, y_s=y_hat_s)
    num = (np.asarray(trans.pdf(t, y_hat), dtype=float) * f_target
           / np.asarray(cmap.law.pdf(t, y_hat), dtype=float))
    base = true_law(cmap.driver, s=s, y_s=y_s)
    den = np.asarray(base.pdf(t, y), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0.0, num / np.where(den == 0.0, 1.0, den),
                       np.where(num > 0.0, np.inf, 0.0))
    return float(out) if np.ndim(y) == 0 else out


def likelihood_ratio_normalization(cmap: CompositeMap, s: float, y_s: float,
                                   t: float, tol: float = 1e-9) -> float:
    """Integral of the likelihood ratio against the base transition density.

    Substituting y = Q_target(v) turns the heavy-tailed y-integral into a
    bounded one over v in (0, 1); the result should equal 1.
    """
    _check_measure_domains(cmap)

    def integrand(v):
        y = float(np.asarray(cmap.target.quantile(v)))
        base = true_law(cmap.driver, s=s, y_s=y_s)
        psi = float(np.asarray(likelihood_ratio(cmap, s, y_s, t, y)))
        dens = float(np.asarray(base.pdf(t, y)))
        f_t = float(np.asarray(cmap.target.pdf(y)))
        return psi * dens / f_t

    val, _ = quad(integrand, 1e-12, 1.0 - 1e-12, epsabs=1e-12, epsrel=tol,
                  limit=400)
    return val


def distorted_expectation(cmap: CompositeMap, s: float, t: float,
                          payoff: Callable, z_s: float,
                          mc_paths: int = 0, seed: int = 0,
                          tol: float = 1e-10):
    """E^{P^Z}[payoff(Y_t) | F_s] = E^P[payoff(Z_t) | F_s].

    Primary path: quadrature of payoff(Z_t) over the driver transition in
    probability space, p -> payoff(Q_target(F_law(t, Q_trans(t, p)))), which
    keeps the domain bounded however heavy the target tails are.  With
    ``mc_paths`` > 0 an exact-transform Monte Carlo estimate and its standard
    error are returned alongside for cross-checking.

    Returns
    -------
    (value, mc_mean, mc_se) — the latter two are None when mc_paths == 0.
    """
    if not cmap.t0 <= s < t:
        raise DomainError("need t0 <= s < t")
    u_s = float(np.asarray(cmap.target.cdf(z_s), dtype=float))
    y_hat_s = float(cmap.law.quantile(s, min(max(u_s, 1e-15), 1 - 1e-15)))
    trans = true_law(cmap.driver, s=s, y_s=y_hat_s)

    def integrand(p):
        v = float(np.asarray(trans.quantile(t, p)))
        z = float(np.asarray(random_level_value(cmap, t, v)))
        return float(payoff(z))

    eps = 1e-13
    value, err = quad(integrand, eps, 1.0 - eps, epsabs=1e-12, epsrel=tol,
                      limit=400)
    if not np.isfinite(value) or err > max(1e-6, 1e-4 * abs(value)):
        raise DivergenceError("distorted expectation quadrature did not converge")

    mc_mean = mc_se = None
    if mc_paths > 0:
        rng = _philox([seed, 9001])
        yv = trans.quantile(t, rng.random(mc_paths))
        zv = np.asarray(random_level_value(cmap, t, yv), dtype=float)
        pv = np.asarray([payoff(float(z)) for z in zv], dtype=float) \
            if not _vectorizable(payoff, zv) else np.asarray(payoff(zv), dtype=float)
        mc_mean = float(np.mean(pv))
        mc_se = float(np.std(pv, ddof=1) / math.sqrt(mc_paths))
    return value, mc_mean, mc_se


def _vectorizable(fn, sample):
    try:
        out = np.asarray(fn(sample[:2]), dtype=float)
        return out.shape == sample[:2].shape
    except Exception:
        return False


def shifted_g_cdf(y, scale_b: float, g: float, gamma: float, t: float,
                  driver_law: MarginalLaw):
    """CDF of the shifted Tukey-g process Z_t = B exp(g Y_t + g gamma t) / g:

        F_Z(t, y) = F_Y(t, (ln(g y / B) - g gamma t) / g),  zero for y <= 0.
    """
    if scale_b <= 0 or g <= 0:
        raise DomainError("need B > 0 and g > 0")
    arr = np.asarray(y, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.zeros_like(arr)
    pos = arr > 0.0
    if np.any(pos):
        w = (np.log(g * arr[pos] / scale_b) - g * gamma * t) / g
        out[pos] = np.asarray(driver_law.cdf(t, w), dtype=float)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Layer pricing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LayerSchedule:
    """Non-overlapping increasing monetary layers (a_i, b_i]."""

    layers: tuple

    def __post_init__(self):
        prev_hi = -np.inf
        for a, b in self.layers:
            if a < 0 or b <= a:
                raise DomainError(f"invalid layer ({a}, {b}]")
            if a < prev_hi:
                raise DomainError("layers must be non-overlapping and increasing")
            prev_hi = b

    @staticmethod
    def table_default(unit: float = 1000.0) -> "LayerSchedule":
        """The ten-layer schedule of the pricing study, in currency units."""
        raw = [(0, 50), (50, 100), (100, 200), (200, 300), (300, 400),
               (400, 500), (500, 1000), (1000, 2000), (2000, 5000), (5000, 10000)]
        return LayerSchedule(tuple((a * unit, b * unit) for a, b in raw))


def layer_premium(survival: Callable, a: float, b: float, tol: float = 1e-8) -> float:
    """Expected layer payout  int_a^b S*(y) dy by adaptive quadrature."""
    if a > b:
        raise DomainError("need a <= b")
    if a == b:
        return 0.0
    val, _ = quad(lambda y: float(survival(y)), a, b,
                  epsabs=1e-12, epsrel=tol, limit=400)
    return val


@dataclass
class Operator:
    """A named distorted-survival transform for pricing."""

    name: str
    distorted_survival: Callable  # base_survival(y)->s, y -> distorted s*
    meta: dict = field(default_factory=dict)


def make_operator(spec: str, driver_law: Optional[MarginalLaw] = None,
                  horizon: float = 1.0) -> Operator:
    """Build a pricing operator from a spec string.

    Forms: ``identity`` | ``ph:r`` | ``wang:lam`` | ``wang2:lam:df`` |
    ``esscher:lam`` | ``tukey_g:g:B:gamma`` (needs the driver law).
    """
    parts = spec.split(":")
    kind = parts[0].strip().lower()
    if kind == "identity":
        return Operator("identity", lambda surv, y: surv(y))
    if kind == "ph":
        r = float(parts[1])
        return Operator(f"ph_{r:g}", lambda surv, y, r=r: ph_transform(surv(y), r),
                        meta={"r": r})
    if kind == "wang":
        lam = float(parts[1])
        return Operator(f"wang_{lam:g}",
                        lambda surv, y, lam=lam: wang1(surv(y), lam),
                        meta={"lam": lam})
    if kind == "wang2":
        lam, df = float(parts[1]), float(parts[2])
        return Operator(f"wang2_{lam:g}_{df:g}",
                        lambda surv, y, lam=lam, df=df: wang2(surv(y), lam, df),
                        meta={"lam": lam, "df": df})
    if kind == "tukey_g":
        g, b_scale, gamma = float(parts[1]), float(parts[2]), float(parts[3])
        if driver_law is None:
            raise DomainError("tukey_g operator needs the driver law")

        def surv_fn(surv, y, g=g, b=b_scale, gamma=gamma):
            return 1.0 - shifted_g_cdf(y, b, g, gamma, horizon, driver_law)

        return Operator(f"tukey_g_{g:g}", surv_fn,
                        meta={"g": g, "B": b_scale, "gamma": gamma})
    raise DomainError(f"unknown operator spec {spec!r}")


@dataclass
class PriceTable:
    schedule: LayerSchedule
    operators: list
    premiums: np.ndarray  # (n_layers, n_operators)
    calibration: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        for j, op in enumerate(self.operators):
            if op.name == name:
                return self.premiums[:, j]
        raise KeyError(name)

    def rows(self):
        for i, (a, b) in enumerate(self.schedule.layers):
            for j, op in enumerate(self.operators):
                yield a, b, op.name, float(self.premiums[i, j])

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("layer_lo,layer_hi,operator,premium\n")
            for a, b, name, prem in self.rows():
                fh.write(f"{float(a)!r},{float(b)!r},{name},{prem!r}\n")

    def to_json_dict(self) -> dict:
        return {
            "layers": [[float(a), float(b)] for a, b in self.schedule.layers],
            "operators": [{"name": op.name, "meta": op.meta} for op in self.operators],
            "premiums": self.premiums.tolist(),
            "calibration": self.calibration,
        }


def price_table(base_survival: Callable, schedule: LayerSchedule,
                operators: Sequence[Operator]) -> PriceTable:
    """Per-layer premiums for every operator against a base survival function."""
    prem = np.empty((len(schedule.layers), len(operators)))
    for j, op in enumerate(operators):
        for i, (a, b) in enumerate(schedule.layers):
            prem[i, j] = layer_premium(lambda y: op.distorted_survival(base_survival, y), a, b)
    return PriceTable(schedule=schedule, operators=list(operators), premiums=prem)


def calibrate_gamma(g: float, scale_b: float, driver_law: MarginalLaw,
                    layer: tuple, target_premium: float, horizon: float = 1.0,
                    bracket: tuple = (-100.0, 100.0), rtol: float = 1e-6) -> dict:
    """Solve for the false-law shift gamma matching one layer premium.

    The layer premium is monotone increasing in gamma (a larger shift pushes
    distorted mass to larger values), so a bracketed root search applies.
    """
    a, b = layer

    def premium_at(gamma):
        surv = lambda y: 1.0 - shifted_g_cdf(y, scale_b, g, gamma, horizon, driver_law)
        return layer_premium(surv, a, b)

    lo, hi = bracket
    f_lo = premium_at(lo) - target_premium
    f_hi = premium_at(hi) - target_premium
    if f_lo * f_hi > 0:
        raise ConvergenceError(
            f"gamma calibration not bracketed on [{lo}, {hi}]: premiums "
            f"({f_lo + target_premium:.4g}, {f_hi + target_premium:.4g}) "
            f"vs target {target_premium:.4g}")
    gamma = brentq(lambda gm: premium_at(gm) - target_premium, lo, hi,
                   xtol=1e-10, rtol=8.9e-16)
    achieved = premium_at(gamma)
    if abs(achieved - target_premium) > rtol * max(1.0, abs(target_premium)):
        raise ConvergenceError("gamma calibration did not reach the target premium")
    return {"gamma": float(gamma), "achieved_premium": float(achieved),
            "target_premium": float(target_premium), "layer": [float(a), float(b)],
            "g": g, "B": scale_b, "bracket": [lo, hi]}
