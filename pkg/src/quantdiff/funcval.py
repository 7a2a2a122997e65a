"""Function-valued quantile diffusions driven by stochastic parameter vectors.

Here the whole quantile curve u -> Q(u; xi_t) evolves through a d-dimensional
parameter diffusion xi_t with correlated Brownian drivers.  Ito's formula
gives, per level u,

    dZ_t(u) = sum_i [dQ/dxi_i a_i + 1/2 sum_j d2Q/dxi_i dxi_j b_i b_j rho_ij] dt
              + sum_i dQ/dxi_i b_i dW^(i).

Fixing the level recovers a scalar diffusion, which for special parameter
choices coincides with a random-level construction.

Coefficient callables receive the parameter state with coordinates on the
leading axis, so ``xi[2]`` is the third coordinate for a single vector and a
whole row of paths in batched evaluation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .special import std_normal_quantile
from .tukey import G_EPS, TukeyParams, tukey_gh_quantile

PARAM_FLOOR = 1e-8


class QuantileFamily:
    """A parametric quantile function with analytic parameter sensitivities.

    ``quantile`` accepts xi of shape (dim,) or batched (dim, n); ``grad`` and
    ``hessian`` work on single vectors.
    """

    dim: int
    names: tuple

    def quantile(self, u, xi):
        raise NotImplementedError

    def grad(self, u, xi) -> np.ndarray:
        """dQ/dxi_i, shape (dim,)."""
        raise NotImplementedError

    def hessian(self, u, xi) -> np.ndarray:
        """d2Q/dxi_i dxi_j, shape (dim, dim)."""
        raise NotImplementedError

    def admissible(self, xi) -> bool:
        return True

    def project(self, xi) -> np.ndarray:
        """Pull parameter vectors (or a (dim, n) batch) into the valid region."""
        return np.asarray(xi, dtype=float)

    def check(self, xi):
        if not self.admissible(xi):
            raise DomainError(
                f"parameter vector {np.asarray(xi)} inadmissible for "
                f"{type(self).__name__}")


class UniformScaleFamily(QuantileFamily):
    """Uniform[0, b] quantiles, Q(u; b) = u * b."""

    dim = 1
    names = ("b",)

    def quantile(self, u, xi):
        xi = np.asarray(xi, dtype=float)
        self.check(xi)
        return float(u) * xi[0]

    def grad(self, u, xi):
        return np.array([float(u)])

    def hessian(self, u, xi):
        return np.zeros((1, 1))

    def admissible(self, xi):
        return bool(np.all(np.asarray(xi)[0] > 0.0))

    def project(self, xi):
        out = np.array(xi, dtype=float, copy=True)
        out[0] = np.maximum(out[0], PARAM_FLOOR)
        return out


class LocationScaleFamily(QuantileFamily):
    """Q(u; A, B) = A + B * Q_base(u) for a fixed base quantile function."""

    dim = 2
    names = ("loc", "scale")

    def __init__(self, base_quantile: Callable[[float], float] = std_normal_quantile):
        self.base_quantile = base_quantile

    def quantile(self, u, xi):
        xi = np.asarray(xi, dtype=float)
        self.check(xi)
        return xi[0] + xi[1] * float(self.base_quantile(u))

    def grad(self, u, xi):
        return np.array([1.0, float(self.base_quantile(u))])

    def hessian(self, u, xi):
        return np.zeros((2, 2))

    def admissible(self, xi):
        return bool(np.all(np.asarray(xi)[1] > 0.0))

    def project(self, xi):
        out = np.array(xi, dtype=float, copy=True)
        out[1] = np.maximum(out[1], PARAM_FLOOR)
        return out


class TukeyGHFamily(QuantileFamily):
    """Tukey g-h quantiles with xi = (loc, scale, g, h), analytic sensitivities."""

    dim = 4
    names = ("loc", "scale", "g", "h")

    def quantile(self, u, xi):
        xi = np.asarray(xi, dtype=float)
        self.check(xi)
        if xi.ndim == 1:
            return tukey_gh_quantile(u, TukeyParams(loc=xi[0], scale=xi[1],
                                                    g=xi[2], h=xi[3]))
        loc, scale, g, h = xi
        x = float(std_normal_quantile(np.clip(u, 1e-15, 1 - 1e-15)))
        small = np.abs(g) <= G_EPS
        base = np.where(small, x, np.expm1(np.where(small, 0.0, g) * x)
                        / np.where(small, 1.0, g))
        return loc + scale * base * np.exp(0.5 * h * x * x)

    @staticmethod
    def _core_pieces(u, g, h):
        x = float(std_normal_quantile(np.clip(u, 1e-15, 1 - 1e-15)))
        e = np.exp(0.5 * h * x * x)
        if abs(g) <= G_EPS:
            base = x
            dbase = 0.5 * x * x          # limit of d/dg[(e^{gx}-1)/g]
            d2base = x ** 3 / 3.0        # limit of the second g-derivative
        else:
            egx = np.exp(g * x)
            em = np.expm1(g * x)
            base = em / g
            dbase = x * egx / g - em / g ** 2
            d2base = x * x * egx / g - 2.0 * x * egx / g ** 2 + 2.0 * em / g ** 3
        return x, e, base, dbase, d2base

    def grad(self, u, xi):
        _, scale, g, h = np.asarray(xi, dtype=float)
        x, e, base, dbase, _ = self._core_pieces(u, g, h)
        k = base * e
        return np.array([1.0, k, scale * dbase * e, scale * k * 0.5 * x * x])

    def hessian(self, u, xi):
        _, scale, g, h = np.asarray(xi, dtype=float)
        x, e, base, dbase, d2base = self._core_pieces(u, g, h)
        x2h = 0.5 * x * x
        k = base * e
        hess = np.zeros((4, 4))
        hess[1, 2] = hess[2, 1] = dbase * e
        hess[1, 3] = hess[3, 1] = k * x2h
        hess[2, 2] = scale * d2base * e
        hess[2, 3] = hess[3, 2] = scale * dbase * e * x2h
        hess[3, 3] = scale * k * x2h * x2h
        return hess

    def admissible(self, xi):
        xi = np.asarray(xi)
        return bool(np.all(xi[1] > 0.0) and np.all(xi[3] >= 0.0))

    def project(self, xi):
        out = np.array(xi, dtype=float, copy=True)
        out[1] = np.maximum(out[1], PARAM_FLOOR)
        out[3] = np.maximum(out[3], 0.0)
        return out


@dataclass
class ParameterProcess:
    """d-dimensional parameter diffusion with correlated Brownian drivers.

    drifts[i](t, xi) and vols[i](t, xi) read the whole current state (xi has
    coordinates on the leading axis and may be batched); ``corr`` must be
    symmetric PSD with unit diagonal.
    """

    drifts: Sequence[Callable]
    vols: Sequence[Callable]
    xi0: np.ndarray
    corr: np.ndarray = None
    family: QuantileFamily = None

    def __post_init__(self):
        self.xi0 = np.asarray(self.xi0, dtype=float)
        d = len(self.xi0)
        if len(self.drifts) != d or len(self.vols) != d:
            raise DomainError("drift/vol count must match dim(xi0)")
        if self.corr is None:
            self.corr = np.eye(d)
        self.corr = np.asarray(self.corr, dtype=float)
        if self.corr.shape != (d, d) or not np.allclose(self.corr, self.corr.T):
            raise DomainError("correlation matrix must be symmetric d x d")
        if np.any(np.abs(np.diag(self.corr) - 1.0) > 1e-12):
            raise DomainError("correlation matrix needs a unit diagonal")
        eigs = np.linalg.eigvalsh(self.corr)
        if eigs.min() < -1e-10:
            raise DomainError("correlation matrix must be positive semidefinite")
        # lower-triangular factor used to correlate the Brownian increments
        jitter = max(0.0, -float(eigs.min())) + 1e-14
        self._chol = np.linalg.cholesky(self.corr + jitter * np.eye(d))
        if self.family is not None and not self.family.admissible(self.xi0):
            raise DomainError("xi0 is not an admissible parameter vector")

    @property
    def dim(self):
        return len(self.xi0)

    def drift_vec(self, t, xi):
        xi = np.asarray(xi, dtype=float)
        return np.array([float(np.asarray(a(t, xi))) for a in self.drifts])

    def vol_vec(self, t, xi):
        xi = np.asarray(xi, dtype=float)
        return np.array([float(np.asarray(b(t, xi))) for b in self.vols])

    def correlated_increments(self, eps, dt):
        """Map iid standard normals (n, d) to correlated increments (n, d)."""
        return (eps @ self._chol.T) * np.sqrt(dt)

    def simulate(self, t_grid, n_paths, seed):
        """Euler paths of xi on t_grid; shape (n_paths, len(t_grid), d).

        Inadmissible excursions are projected back after every step.
        """
        t_grid = np.asarray(t_grid, dtype=float)
        rng = np.random.Generator(np.random.Philox(key=seed))
        d = self.dim
        out = np.empty((n_paths, len(t_grid), d))
        out[:, 0, :] = self.xi0
        xi = np.tile(self.xi0, (n_paths, 1))  # (n, d)
        ones = np.ones(n_paths)
        for k in range(len(t_grid) - 1):
            t = float(t_grid[k])
            dt = float(t_grid[k + 1]) - t
            dw = self.correlated_increments(rng.standard_normal((n_paths, d)), dt)
            cols = xi.T
            a = np.stack([np.asarray(self.drifts[i](t, cols), dtype=float) * ones
                          for i in range(d)], axis=1)
            b = np.stack([np.asarray(self.vols[i](t, cols), dtype=float) * ones
                          for i in range(d)], axis=1)
            xi = xi + a * dt + b * dw
            if self.family is not None:
                xi = self.family.project(xi.T).T
            out[:, k + 1, :] = xi
        return out


def function_valued_value(family: QuantileFamily, xi, u):
    """Z_t(u) = Q(u; xi): one point of the quantile curve."""
    if not 0.0 <= float(u) <= 1.0:
        raise DomainError("u must lie in [0, 1]")
    return family.quantile(u, np.asarray(xi, dtype=float))


def function_valued_sde_coefficients(family: QuantileFamily, xi, u,
                                     process: ParameterProcess, t=0.0):
    """Drift and per-driver volatility loadings of Z_t(u).

    Returns
    -------
    (drift, vols) : (float, ndarray)
        vols[i] is the loading on W^(i); the scalar variance of Z is
        vols @ corr @ vols.
    """
    xi = np.asarray(xi, dtype=float)
    family.check(xi)
    a = process.drift_vec(t, xi)
    b = process.vol_vec(t, xi)
    grad = family.grad(u, xi)
    hess = family.hessian(u, xi)
    bb = np.outer(b, b) * process.corr
    drift = float(grad @ a + 0.5 * np.sum(hess * bb))
    return drift, grad * b


@dataclass
class FixedLevelProcess:
    """The scalar diffusion Z_t = Q(u_bar; xi_t) carved out of the curve."""

    family: QuantileFamily
    process: ParameterProcess
    u_bar: float

    def __post_init__(self):
        if not 0.0 <= self.u_bar <= 1.0:
            raise DomainError("u_bar must lie in [0, 1]")

    def value(self, xi):
        return function_valued_value(self.family, xi, self.u_bar)

    def coefficients(self, t, xi):
        return function_valued_sde_coefficients(self.family, xi, self.u_bar,
                                                self.process, t)

    def simulate_values(self, t_grid, n_paths, seed):
        """Exact mapping of simulated parameter paths; (n_paths, len(t_grid))."""
        xi_paths = self.process.simulate(t_grid, n_paths, seed)
        n, m, _ = xi_paths.shape
        out = np.empty((n, m))
        for k in range(m):
            out[:, k] = np.asarray(self.family.quantile(self.u_bar,
                                                        xi_paths[:, k, :].T))
        return out


def fixed_level_process(family: QuantileFamily, process: ParameterProcess,
                        u_bar: float) -> FixedLevelProcess:
    """Factory for the fixed-level scalar diffusion at level u_bar."""
    return FixedLevelProcess(family=family, process=process, u_bar=u_bar)
