"""Kernel lane selection and the closed-form SDE kernel descriptors.

The Euler-Maruyama inner loops exist twice: a numba @njit lane parallelised
over paths and a vectorised pure-numpy fallback.  The environment variable
``QUANTDIFF_DISABLE_NUMBA=1`` (or an unavailable numba) selects the fallback.
``benchmarks/benchmark_kernels.py`` times the two lanes against each other.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kern_numpy

_FLAG = os.environ.get("QUANTDIFF_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG in {"1", "true", "yes", "on"}

if not _DISABLED:
    try:
        from . import _kern_numba as _impl
        _LANE = "numba"
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _impl = _kern_numpy
        _LANE = "numpy"
else:
    _impl = _kern_numpy
    _LANE = "numpy"


def active_lane() -> str:
    """Which kernel lane is live: 'numba' or 'numpy'."""
    return _LANE


def g_family_block(*args):
    return _impl.g_family_block(*args)


def h_family_block(*args):
    return _impl.h_family_block(*args)


# ---------------------------------------------------------------------------
# Kernel descriptors: closed-form coefficient families the kernels understand
# ---------------------------------------------------------------------------

@dataclass
class GFamilyKernel:
    """True-law Tukey-g SDE with Gaussian-core driver.

    alpha = drift_pre(t) (g - ln(gz+1)/g)(gz+1), sigma = vol_pre(t) (gz+1),
    where drift_pre = sigma^2/(2 Var(Y_t|Y_0)) and vol_pre = sigma/sqrt(Var).
    """

    g: float
    drift_pre: Callable[[np.ndarray], np.ndarray]
    vol_pre: Callable[[np.ndarray], np.ndarray]

    def coefficients(self, t, z):
        z = np.asarray(z, dtype=float)
        gz1 = g_clip(self.g, z) * self.g + 1.0
        lg = np.log(gz1)
        a = self.drift_pre(np.asarray(t, float)) * (self.g - lg / self.g) * gz1
        s = self.vol_pre(np.asarray(t, float)) * gz1
        return a, s


@dataclass
class HFamilyKernel:
    """True-law Tukey-h SDE with Gaussian-core driver (BM or OU).

    alpha = drift_pre(t) x e^{h x^2/2}((3h-1) + h(h-1)x^2),
    sigma = vol_pre(t) (1 + h x^2) e^{h x^2/2},   z = x e^{h x^2/2}.
    """

    h: float
    drift_pre: Callable[[np.ndarray], np.ndarray]
    vol_pre: Callable[[np.ndarray], np.ndarray]


def g_clip(g, z):
    from .sde import g_state_clip
    return g_state_clip(z, g)


def bm_prefactors():
    """Var = sigma^2 t for a (possibly drifted) BM or GBM driver."""
    return (lambda t: 1.0 / (2.0 * np.asarray(t, float)),
            lambda t: 1.0 / np.sqrt(np.asarray(t, float)))


def ou_prefactors(theta: float):
    """Var = sigma^2 (1 - exp(-2 theta t)) / (2 theta) for an OU driver."""
    def decay(t):
        return 1.0 - np.exp(-2.0 * theta * np.asarray(t, float))

    return (lambda t: theta / decay(t),
            lambda t: np.sqrt(2.0 * theta) / np.sqrt(decay(t)))


def g_kernel_bm(g: float) -> GFamilyKernel:
    a, s = bm_prefactors()
    return GFamilyKernel(g=g, drift_pre=a, vol_pre=s)


def g_kernel_ou(g: float, theta: float) -> GFamilyKernel:
    a, s = ou_prefactors(theta)
    return GFamilyKernel(g=g, drift_pre=a, vol_pre=s)


def h_kernel_bm(h: float) -> HFamilyKernel:
    a, s = bm_prefactors()
    return HFamilyKernel(h=h, drift_pre=a, vol_pre=s)


def h_kernel_ou(h: float, theta: float) -> HFamilyKernel:
    a, s = ou_prefactors(theta)
    return HFamilyKernel(h=h, drift_pre=a, vol_pre=s)
