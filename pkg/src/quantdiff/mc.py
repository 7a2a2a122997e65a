"""Monte Carlo engine: Euler-Maruyama, exact transform sampling, empirical
quantile processes, Bahadur remainders, and Kolmogorov-Smirnov distances.

Randomness comes from counter-based Philox streams keyed by the run seed;
path i always reads lane i of each drawn block, so a (seed, grid, spec)
triple reproduces bit-identical batches and per-path streams are fixed
functions of (seed, path_id).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .driving import BM_DRIFT, GBM, OU, DiffusionSpec, true_law
from .errors import BlowUpError, DomainError
from .kernels import GFamilyKernel, HFamilyKernel, g_family_block, h_family_block
from .sde import CompositeMap, g_state_clip, random_level_value
from .tukey import UnivariateLaw, _h_x_from_z

KS_COEFF = {0.01: 1.62762, 0.05: 1.35810}


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t0 = t_0 < ... < t_steps = t_end with t0 > 0."""

    t0: float
    t_end: float
    steps: int

    def __post_init__(self):
        if self.t0 <= 0:
            raise DomainError("t0 must be positive")
        if self.t_end <= self.t0:
            raise DomainError("t_end must exceed t0")
        if self.steps < 1:
            raise DomainError("need at least one step")

    @property
    def dt(self) -> float:
        return (self.t_end - self.t0) / self.steps

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.steps + 1)

    def index_of(self, t: float) -> int:
        idx = int(round((t - self.t0) / self.dt))
        if idx < 0 or idx > self.steps or abs(self.t0 + idx * self.dt - t) > 1e-9:
            raise DomainError(f"time {t} is not on the grid")
        return idx


@dataclass
class PathBatch:
    """Simulated paths at selected grid times; values has shape (paths, times)."""

    times: np.ndarray
    values: np.ndarray
    seed: int
    label: str = "SDE"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.times):
            raise DomainError("values must be (n_paths, n_times)")

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    def at_time(self, t: float) -> np.ndarray:
        j = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[j] - t) > 1e-9:
            raise DomainError(f"time {t} not stored in this batch")
        return self.values[:, j]

    def to_csv(self, path):
        """Write `t,path_id,value` rows ordered by time then path."""
        with open(path, "w") as fh:
            fh.write("t,path_id,value\n")
            for j, t in enumerate(self.times):
                col = self.values[:, j]
                for i in range(col.shape[0]):
                    fh.write(f"{float(t)!r},{i},{float(col[i])!r}\n")


def _resolve_store(grid: TimeGrid, store_times) -> np.ndarray:
    if store_times is None:
        return np.arange(grid.steps + 1)
    idx = sorted({grid.index_of(float(t)) for t in store_times})
    return np.asarray(idx, dtype=int)


def _philox(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


# ---------------------------------------------------------------------------
# Euler-Maruyama
# ---------------------------------------------------------------------------

CoeffLike = Union[Callable, GFamilyKernel, HFamilyKernel]


def euler_maruyama(coeff: CoeffLike, z0, grid: TimeGrid, n_paths: int, seed: int,
                   store_times: Optional[Sequence[float]] = None,
                   clip: Optional[Callable] = None, blowup: float = 1e12,
                   block_steps: int = 256) -> PathBatch:
    """Explicit Euler scheme Z_{k+1} = Z_k + alpha dt + sigma sqrt(dt) N(0,1).

    Parameters
    ----------
    coeff : callable or kernel descriptor
        Either ``coeff(t, z_array) -> (alpha_array, sigma_array)`` or a
        GFamilyKernel/HFamilyKernel, which runs on the jitted lane.
    z0 : float, ndarray or callable
        Initial states at grid.t0; a callable receives the run Generator and
        must return ``n_paths`` draws (consumed before any step noise).
    store_times : sequence of float, optional
        Grid times to keep; defaults to the whole grid.

    Raises
    ------
    BlowUpError
        If any |Z| exceeds ``blowup``.
    """
    rng = _philox(seed)
    if callable(z0):
        z = np.asarray(z0(rng), dtype=float).copy()
        if z.shape != (n_paths,):
            raise DomainError("z0 callable must return n_paths values")
    else:
        z = np.broadcast_to(np.asarray(z0, dtype=float), (n_paths,)).astype(float).copy()

    store_idx = _resolve_store(grid, store_times)
    times = grid.times()
    out = np.empty((n_paths, len(store_idx)))
    store_pos = {int(k): j for j, k in enumerate(store_idx)}
    if 0 in store_pos:
        out[:, store_pos[0]] = z

    is_g = isinstance(coeff, GFamilyKernel)
    is_h = isinstance(coeff, HFamilyKernel)
    if is_g:
        z = g_state_clip(z, coeff.g)
    x_state = None
    if is_h:
        x_state = np.asarray(_h_x_from_z(z, coeff.h), dtype=float).copy()

    dt = grid.dt
    k = 0
    while k < grid.steps:
        nk = min(block_steps, grid.steps - k)
        normals = rng.standard_normal((n_paths, nk))
        t_block = times[k:k + nk]
        # stop the block early at stored times so snapshots can be copied
        cuts = [j - k for j in range(k + 1, k + nk + 1) if j in store_pos]
        start = 0
        for cut in cuts + ([nk] if (not cuts or cuts[-1] != nk) else []):
            if cut == start:
                continue
            seg = slice(start, cut)
            if is_g:
                apre = coeff.drift_pre(t_block[seg])
                spre = coeff.vol_pre(t_block[seg])
                g_family_block(z, coeff.g, 1e-12, np.asarray(apre, float),
                               np.asarray(spre, float), dt, normals[:, seg])
            elif is_h:
                apre = coeff.drift_pre(t_block[seg])
                spre = coeff.vol_pre(t_block[seg])
                h_family_block(z, x_state, coeff.h, np.asarray(apre, float),
                               np.asarray(spre, float), dt, normals[:, seg])
            else:
                for j in range(start, cut):
                    alpha, sigma = coeff(t_block[j], z)
                    z += (np.asarray(alpha, float) * dt
                          + np.asarray(sigma, float) * math.sqrt(dt) * normals[:, j])
                    if clip is not None:
                        z = clip(z)
            kk = k + cut
            if kk in store_pos:
                out[:, store_pos[kk]] = z
            start = cut
        if not np.all(np.isfinite(z)) or np.max(np.abs(z)) > blowup:
            raise BlowUpError(f"path magnitude exceeded {blowup:g} near t={times[min(k + nk, grid.steps)]}")
        k += nk

    return PathBatch(times=times[store_idx], values=out, seed=seed, label="SDE")


# ---------------------------------------------------------------------------
# Exact driver and transform sampling
# ---------------------------------------------------------------------------

def _exact_step(spec: DiffusionSpec, y, s, t, xi):
    """One exact transition Y_t | Y_s = y using a standard normal draw xi."""
    dt = t - s
    p = spec.params
    if spec.kind == BM_DRIFT:
        return y + p["mu"] * dt + p["sigma"] * math.sqrt(dt) * xi
    if spec.kind == GBM:
        return y * np.exp((p["mu"] - 0.5 * p["sigma"] ** 2) * dt
                          + p["sigma"] * math.sqrt(dt) * xi)
    if spec.kind == OU:
        th, lv, sg = p["theta"], p["level"], p["sigma"]
        sd = sg * math.sqrt((1.0 - math.exp(-2.0 * th * dt)) / (2.0 * th))
        return lv + (y - lv) * np.exp(-th * dt) + sd * xi
    raise DomainError(f"no exact transition sampler for driver kind {spec.kind!r}")


def simulate_driver_paths(spec: DiffusionSpec, grid: TimeGrid, n_paths: int,
                          seed: int, store_times=None) -> PathBatch:
    """Exact driver paths on the grid; the first point is an exact draw of
    Y_{t0} transitioned from (0, y0)."""
    rng = _philox(seed)
    store_idx = _resolve_store(grid, store_times)
    times = grid.times()
    out = np.empty((n_paths, len(store_idx)))
    store_pos = {int(kk): j for j, kk in enumerate(store_idx)}

    y = _exact_step(spec, np.full(n_paths, float(spec.y0)), 0.0, grid.t0,
                    rng.standard_normal(n_paths))
    if 0 in store_pos:
        out[:, store_pos[0]] = y
    for k in range(grid.steps):
        y = _exact_step(spec, y, times[k], times[k + 1], rng.standard_normal(n_paths))
        if k + 1 in store_pos:
            out[:, store_pos[k + 1]] = y
    return PathBatch(times=times[store_idx], values=out, seed=seed, label="DRIVER")


def simulate_transform_paths(cmap: CompositeMap, grid: TimeGrid, n_paths: int,
                             seed: int, store_times=None) -> PathBatch:
    """Exact-in-distribution quantile-diffusion paths Z = Q_target(F(t, Y_t)).

    The driver is sampled by exact transitions (same seed convention as
    simulate_driver_paths), then mapped pointwise at the stored times.
    """
    driver = simulate_driver_paths(cmap.driver, grid, n_paths, seed, store_times)
    values = np.empty_like(driver.values)
    for j, t in enumerate(driver.times):
        values[:, j] = random_level_value(cmap, float(t), driver.values[:, j])
    return PathBatch(times=driver.times, values=values, seed=seed, label="TRANSFORM")


def transform_initial_states(cmap: CompositeMap, t0: float, n_paths: int,
                             rng: np.random.Generator) -> np.ndarray:
    """Exact draws of Z_{t0} (uniforms through the unconditional composite law)."""
    u = rng.random(n_paths)
    y = true_law(cmap.driver).quantile(t0, u)
    return np.asarray(random_level_value(cmap, t0, y), dtype=float)


# ---------------------------------------------------------------------------
# Empirical quantile process and Bahadur remainder
# ---------------------------------------------------------------------------

def empirical_quantile(sample: np.ndarray, u) -> np.ndarray:
    """Q_n(u): the k-th order statistic with (k-1)/n < u <= k/n."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.shape[0]
    if n < 1:
        raise DomainError("sample must be nonempty")
    u = np.asarray(u, dtype=float)
    k = np.ceil(n * u).astype(int)
    k = np.clip(k, 1, n)
    return x[k - 1]


def empirical_quantile_process(sample: np.ndarray, true_quantile: Callable, u):
    """q_n(u) = sqrt(n) (Q_n(u) - Q(u)) for levels u in (0, 1)."""
    sample = np.asarray(sample, dtype=float)
    n = sample.shape[0]
    qn = empirical_quantile(sample, u)
    q = np.asarray(true_quantile(np.asarray(u, dtype=float)), dtype=float)
    return math.sqrt(n) * (qn - q)


@dataclass
class BahadurReport:
    u: float
    ns: np.ndarray
    remainders: np.ndarray
    slope: float


def bahadur_remainder(law: UnivariateLaw, u: float, seed: int,
                      exponents=range(10, 21)) -> BahadurReport:
    """Remainder of the Bahadur expansion of the sample u-quantile.

    Along nested samples of size n = 2^k,

        R_n = Y_n - eta - (Z_n - n(1-u)) / (n f(eta))

    with Y_n the sample quantile, eta the population quantile, and Z_n the
    exceedance count over eta.  Reports the slope of log |R_n| against log n
    (theory: -3/4 up to a log factor).
    """
    ns = np.array([2 ** k for k in exponents], dtype=int)
    eta = float(law.quantile(u))
    feta = float(law.pdf(eta))
    if feta <= 0:
        raise DomainError("law density must be positive at the u-quantile")
    rng = _philox([seed, 42])
    xs = np.asarray(law.quantile(rng.random(int(ns[-1]))), dtype=float)
    rem = np.empty(len(ns))
    for j, n in enumerate(ns):
        x = xs[:n]
        k = min(max(int(np.ceil(n * u)), 1), n)
        yn = np.partition(x, k - 1)[k - 1]
        zn = int(np.count_nonzero(x > eta))
        rn = yn - eta - (zn - n * (1.0 - u)) / (n * feta)
        rem[j] = max(abs(rn), 1e-300)
    slope = float(np.polyfit(np.log(ns), np.log(rem), 1)[0]) if len(ns) > 1 else float("nan")
    return BahadurReport(u=u, ns=ns, remainders=rem, slope=slope)


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov
# ---------------------------------------------------------------------------

@dataclass
class KSResult:
    statistic: float
    n: int
    m: Optional[int]
    crit_1pct: float
    crit_5pct: float

    @property
    def below_1pct(self) -> bool:
        return self.statistic < self.crit_1pct

    @property
    def below_5pct(self) -> bool:
        return self.statistic < self.crit_5pct


def ks_distance(sample_a, sample_b=None, cdf: Optional[Callable] = None) -> KSResult:
    """Two-sample (or one-sample, via ``cdf``) KS statistic with asymptotic
    1% and 5% critical values."""
    a = np.sort(np.asarray(sample_a, dtype=float))
    n = a.shape[0]
    if n == 0:
        raise DomainError("samples must be nonempty")
    if (sample_b is None) == (cdf is None):
        raise DomainError("provide exactly one of sample_b or cdf")
    if cdf is not None:
        f = np.asarray(cdf(a), dtype=float)
        i = np.arange(1, n + 1)
        stat = max(np.max(i / n - f), np.max(f - (i - 1) / n))
        scale = 1.0 / math.sqrt(n)
        return KSResult(float(stat), n, None,
                        KS_COEFF[0.01] * scale, KS_COEFF[0.05] * scale)
    b = np.sort(np.asarray(sample_b, dtype=float))
    m = b.shape[0]
    if m == 0:
        raise DomainError("samples must be nonempty")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / n
    cdf_b = np.searchsorted(b, grid, side="right") / m
    stat = float(np.max(np.abs(cdf_a - cdf_b)))
    scale = math.sqrt((n + m) / (n * m))
    return KSResult(stat, n, m, KS_COEFF[0.01] * scale, KS_COEFF[0.05] * scale)
