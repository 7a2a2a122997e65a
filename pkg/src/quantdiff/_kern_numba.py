"""Numba-jitted Euler-Maruyama hot kernels, parallelised over paths.

Mirrors _kern_numpy exactly; see there for the coefficient conventions.
"""
import numpy as np
from numba import njit, prange


@njit(cache=True)
def _lambert_w0(v):
    """Principal-branch Lambert W for scalar v >= 0, Halley iteration."""
    if v <= 0.0:
        return 0.0
    if v < 1.0:
        w = v * (1.0 - v)
    elif v <= np.e:
        w = np.log1p(v)
    else:
        l1 = np.log(v)
        l2 = np.log(l1)
        w = l1 - l2 + l2 / l1
    for _ in range(20):
        ew = np.exp(w)
        f = w * ew - v
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        if denom == 0.0:
            break
        dw = f / denom
        w -= dw
        if abs(dw) <= 1e-13 * (1.0 + abs(w)):
            break
    return w


@njit(cache=True, parallel=True)
def g_family_block(z, g, floor, apre, spre, dt, normals):
    sqdt = np.sqrt(dt)
    n_paths = z.shape[0]
    n_steps = normals.shape[1]
    z_bound = (floor - 1.0) / g
    for i in prange(n_paths):
        zi = z[i]
        for k in range(n_steps):
            if g > 0:
                if zi < z_bound:
                    zi = z_bound
            elif zi > z_bound:
                zi = z_bound
            gz1 = g * zi + 1.0
            lg = np.log(gz1)
            zi += (apre[k] * (g - lg / g) * gz1 * dt
                   + spre[k] * gz1 * sqdt * normals[i, k])
        if g > 0:
            if zi < z_bound:
                zi = z_bound
        elif zi > z_bound:
            zi = z_bound
        z[i] = zi
    return z


@njit(cache=True, parallel=True)
def h_family_block(z, x, h, apre, spre, dt, normals):
    sqdt = np.sqrt(dt)
    n_paths = z.shape[0]
    n_steps = normals.shape[1]
    for i in prange(n_paths):
        zi = z[i]
        xi = x[i]
        for k in range(n_steps):
            x2 = xi * xi
            e = np.exp(0.5 * h * x2)
            alpha = apre[k] * xi * e * ((3.0 * h - 1.0) + h * (h - 1.0) * x2)
            sigma = spre[k] * (1.0 + h * x2) * e
            zi += alpha * dt + sigma * sqdt * normals[i, k]
            if h > 0.0:
                w = _lambert_w0(h * zi * zi)
                xi = np.sqrt(w / h)
                if zi < 0.0:
                    xi = -xi
            else:
                xi = zi
        z[i] = zi
        x[i] = xi
    return z, x
