"""Pure-numpy fallback implementations of the Euler-Maruyama hot kernels.

Same call signatures and the same draw-consumption order as the numba lane,
so a fixed seed gives the same paths up to floating-point association.
"""
import numpy as np

from .special import lambert_w0


def g_family_block(z, g, floor, apre, spre, dt, normals):
    """Advance the true-law g-family SDE over one block of steps, in place.

    alpha = apre[k] (g - ln(gz+1)/g)(gz+1), sigma = spre[k] (gz+1);
    states are clipped so that gz+1 >= floor before each step.
    """
    sqdt = np.sqrt(dt)
    n_steps = normals.shape[1]
    z_bound = (floor - 1.0) / g
    for k in range(n_steps):
        if g > 0:
            np.maximum(z, z_bound, out=z)
        else:
            np.minimum(z, z_bound, out=z)
        gz1 = g * z + 1.0
        lg = np.log(gz1)
        z += (apre[k] * (g - lg / g) * gz1 * dt
              + spre[k] * gz1 * sqdt * normals[:, k])
    if g > 0:
        np.maximum(z, z_bound, out=z)
    else:
        np.minimum(z, z_bound, out=z)
    return z


def h_family_block(z, x, h, apre, spre, dt, normals):
    """Advance the Gaussian-driver true-law h-family SDE over one block.

    Carries x = x_u alongside z; after each z update, x is recovered from
    z = x exp(h x^2 / 2) through Lambert W.

    alpha = apre[k] x e^{h x^2/2} ((3h-1) + h(h-1) x^2)
    sigma = spre[k] (1 + h x^2) e^{h x^2/2}
    """
    sqdt = np.sqrt(dt)
    n_steps = normals.shape[1]
    for k in range(n_steps):
        x2 = x * x
        e = np.exp(0.5 * h * x2)
        alpha = apre[k] * x * e * ((3.0 * h - 1.0) + h * (h - 1.0) * x2)
        sigma = spre[k] * (1.0 + h * x2) * e
        z += alpha * dt + sigma * sqdt * normals[:, k]
        if h > 0.0:
            w = lambert_w0(h * z * z)
            x = np.sign(z) * np.sqrt(w / h)
        else:
            x = z.copy()
    return z, x
