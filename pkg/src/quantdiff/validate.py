"""Validation suites behind the `validate` CLI command.

Each suite returns a SuiteResult with a pass flag and detail numbers; the
command serialises them to JSON and exits nonzero on any failure.  The same
checks back the package's acceptance tests at full size; suite sizes here are
chosen to finish inside a ten-minute budget on a laptop.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import distortion as dist
from . import driving, kernels, mc, sde, tukey


@dataclass
class SuiteResult:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    runtime_s: float = 0.0

    def to_dict(self):
        return {"name": self.name, "passed": bool(self.passed),
                "runtime_s": round(self.runtime_s, 3), "details": self.details}


def _timed(fn):
    def wrapper(*a, **kw):
        start = time.time()
        res = fn(*a, **kw)
        res.runtime_s = time.time() - start
        return res
    return wrapper


@_timed
def suite_roundtrip(tol: float = 1e-10) -> SuiteResult:
    """Quantile/CDF roundtrips across the g/h/g-h parameter lattice."""
    us = np.linspace(0.001, 0.999, 99)
    worst = 0.0
    cases = 0
    import warnings
    for g in (-2.0, -0.8, -0.1, 0.0, 0.1, 0.8, 2.0):
        for h in (0.0, 0.05, 0.1, 0.5):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                p = tukey.TukeyParams(loc=0.3, scale=1.7, g=g, h=h)
            z = tukey.tukey_gh_quantile(us, p)
            back = tukey.tukey_gh_cdf(z, p)
            worst = max(worst, float(np.max(np.abs(back - us))))
            if np.any(np.diff(z) <= 0):
                return SuiteResult("roundtrip", False,
                                   {"monotonicity_failed_at": {"g": g, "h": h}})
            cases += 1
    return SuiteResult("roundtrip", worst < tol,
                       {"worst_roundtrip_error": worst, "cases": cases, "tol": tol})


@_timed
def suite_density_normalization(tol: float = 1e-8) -> SuiteResult:
    """Family densities integrate to one over their support."""
    import warnings
    worst = 0.0
    for g, h in ((0.8, 0.0), (-0.8, 0.0), (0.0, 0.1), (0.0, 0.5), (0.5, 0.1)):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            p = tukey.TukeyParams(g=g, h=h)
        mass = tukey.tukey_law(p).normalization()
        worst = max(worst, abs(mass - 1.0))
    return SuiteResult("density", worst < tol,
                       {"worst_mass_error": worst, "tol": tol})


@_timed
def suite_sde_transform(n_paths: int = 20_000, dt: float = 1e-3,
                        seeds=(0, 1), t0: float = 0.05) -> SuiteResult:
    """Two-sample KS between Euler-Maruyama and exact transform marginals."""
    snaps = (0.25, 0.5, 1.0)
    grid = mc.TimeGrid(t0, 1.0, round((1.0 - t0) / dt))
    fails, stats = 0, {}
    cases = {
        "bm_g": (driving.bm_drift(0.0, 1.0, 0.0), kernels.g_kernel_bm(0.5),
                 tukey.TukeyParams(g=0.5)),
        "ou_g": (driving.ou(theta=1.0, level=0.0, sigma=1.0, y0=0.0),
                 kernels.g_kernel_ou(0.5, 1.0), tukey.TukeyParams(g=0.5)),
        "bm_h": (driving.bm_drift(0.0, 1.0, 0.0), kernels.h_kernel_bm(0.1),
                 tukey.TukeyParams(h=0.1)),
    }
    for name, (spec, kern, params) in cases.items():
        cmap = sde.CompositeMap(target=tukey.tukey_law(params),
                                law=driving.true_law(spec), driver=spec, t0=t0)
        for seed in seeds:
            tr = mc.simulate_transform_paths(cmap, grid, n_paths, seed,
                                             store_times=snaps)
            em = mc.euler_maruyama(
                kern, lambda rng: mc.transform_initial_states(cmap, t0, n_paths, rng),
                grid, n_paths, seed + 10_000, store_times=snaps)
            for t in snaps:
                res = mc.ks_distance(tr.at_time(t), em.at_time(t))
                stats[f"{name}_seed{seed}_t{t}"] = res.statistic
                fails += 0 if res.below_1pct else 1
    return SuiteResult("sde_transform", fails == 0,
                       {"failures": fails, "ks": stats})


@_timed
def suite_bahadur(seeds=range(6)) -> SuiteResult:
    """Median Bahadur remainder slope inside [-0.9, -0.6]."""
    results = {}
    ok = True
    for name, law in (("uniform", tukey.uniform_law(0, 1)),
                      ("normal", tukey.normal_law())):
        for u in (0.5, 0.9):
            slopes = [mc.bahadur_remainder(law, u, seed).slope for seed in seeds]
            med = float(np.median(slopes))
            results[f"{name}_u{u}"] = med
            ok = ok and -0.9 <= med <= -0.6
    return SuiteResult("bahadur", ok, {"median_slopes": results})


def wang_replication_deviation(lam: float, params: "tukey.TukeyParams",
                               t: float = 0.5) -> float:
    """Max |F_Z(t, z) - wang1(F_target(z), lam)| over a 99-point z grid.

    The quantile diffusion uses the N(lam, 1) CDF as its false law over a
    stationary standard-normal driver, which replicates the one-factor Wang
    distortion of the target CDF exactly.
    """
    import warnings
    spec = driving.custom(mu=lambda tt, y: np.zeros_like(np.asarray(y, float)),
                          sigma=lambda tt, y: np.ones_like(np.asarray(y, float)),
                          y0=0.0)
    stationary = driving.StationaryLaw(tukey.normal_law())
    stationary.tag = driving.TRUE_LAW
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        target = tukey.tukey_law(params)
    cmap = sde.CompositeMap(target=target, law=driving.NormalShiftLaw(loc=lam),
                            driver=spec, t0=1e-3, driver_law=stationary)
    zs = np.asarray(target.quantile(np.linspace(0.001, 0.999, 99)), dtype=float)
    lhs = np.asarray(dist.quantile_induced_cdf(cmap, t, zs), dtype=float)
    rhs = np.asarray(dist.wang1(np.asarray(target.cdf(zs), dtype=float), lam),
                     dtype=float)
    return float(np.max(np.abs(lhs - rhs)))


@_timed
def suite_wang_replication(tol: float = 1e-12) -> SuiteResult:
    """Quantile-induced distortion equals the one-factor Wang transform."""
    worst = 0.0
    for lam in (-0.5, 0.1, 0.5):
        for params in (tukey.TukeyParams(), tukey.TukeyParams(g=0.8),
                       tukey.TukeyParams(h=0.1)):
            worst = max(worst, wang_replication_deviation(lam, params))
    return SuiteResult("wang_replication", worst < tol,
                       {"max_abs_deviation": worst, "tol": tol})


@_timed
def suite_premium_additivity(tol: float = 1e-6) -> SuiteResult:
    """pi(a, c] = pi(a, b] + pi(b, c] for the distorted Pareto survival."""
    base = tukey.pareto_law(2000.0, 1.2)
    surv = lambda y: dist.wang1(1.0 - float(np.asarray(base.cdf(y))), 0.1)
    a, b, c = 50_000.0, 120_000.0, 300_000.0
    whole = dist.layer_premium(surv, a, c)
    split = dist.layer_premium(surv, a, b) + dist.layer_premium(surv, b, c)
    err = abs(whole - split) / whole
    return SuiteResult("premium_additivity", err < tol,
                       {"relative_error": err, "tol": tol})


@_timed
def suite_uniformity(n: int = 100_000, seed: int = 3) -> SuiteResult:
    """U_t = F(t, Y_t) under the true law is Uniform[0,1] (KS at 1%)."""
    spec = driving.ou(theta=1.3, level=0.4, sigma=0.8, y0=1.0)
    grid = mc.TimeGrid(0.05, 1.0, 19)
    batch = mc.simulate_driver_paths(spec, grid, n, seed, store_times=(0.5,))
    u = driving.true_law(spec).cdf(0.5, batch.at_time(0.5))
    res = mc.ks_distance(u, cdf=lambda x: np.clip(x, 0.0, 1.0))
    return SuiteResult("uniformity", res.below_1pct,
                       {"ks": res.statistic, "crit_1pct": res.crit_1pct})


def lipschitz_tables() -> str:
    """L1-L10 diagnostic tables for representative g and h maps."""
    spec = driving.bm_drift(0.0, 1.0, 0.0)
    out = []
    gmap = sde.CompositeMap(target=tukey.tukey_law(tukey.TukeyParams(g=0.5)),
                            law=driving.true_law(spec), driver=spec, t0=0.05)
    out.append(sde.lipschitz_diagnostics(gmap, "g", g=0.5, t=1.0).table())
    hmap = sde.CompositeMap(target=tukey.tukey_law(tukey.TukeyParams(h=0.1)),
                            law=driving.true_law(spec), driver=spec, t0=0.05)
    out.append(sde.lipschitz_diagnostics(hmap, "h", h=0.1, t=1.0).table())
    return "\n\n".join(out)


SUITES = {
    "roundtrip": suite_roundtrip,
    "density": suite_density_normalization,
    "sde_transform": suite_sde_transform,
    "bahadur": suite_bahadur,
    "wang_replication": suite_wang_replication,
    "premium_additivity": suite_premium_additivity,
    "uniformity": suite_uniformity,
}

DEFAULT_SUITES = ("roundtrip", "density", "sde_transform", "bahadur",
                  "wang_replication", "premium_additivity")


def run_suites(names=None) -> list:
    names = list(names) if names else list(DEFAULT_SUITES)
    results = []
    for name in names:
        if name not in SUITES:
            raise KeyError(f"unknown suite {name!r}; available: {sorted(SUITES)}")
        results.append(SUITES[name]())
    return results
