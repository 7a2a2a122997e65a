#!/usr/bin/env python3
"""Benchmark the numba kernel lane against the pure-numpy fallback.

Times the g-family and h-family Euler-Maruyama blocks on identical inputs
and checks the lanes agree.  Run as a script:

    python benchmarks/benchmark_kernels.py [--paths N] [--steps K]
"""
import argparse
import time

import numpy as np

from quantdiff import _kern_numpy
from quantdiff import _kern_numba


def bench(fn, args_factory, repeats=5):
    best = np.inf
    for _ in range(repeats):
        args = args_factory()
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--paths", type=int, default=100_000)
    parser.add_argument("--steps", type=int, default=256)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.Generator(np.random.Philox(key=1234))
    n, k = args.paths, args.steps
    normals = rng.standard_normal((n, k))
    z0 = rng.standard_normal(n) * 0.3
    dt = 1e-3
    tgrid = 0.05 + dt * np.arange(k)

    g = 0.5
    apre = 1.0 / (2.0 * tgrid)
    spre = 1.0 / np.sqrt(tgrid)

    def g_args():
        return (z0.copy(), g, 1e-12, apre, spre, dt, normals)

    h = 0.1

    def h_args():
        x0 = z0.copy()  # exact x is irrelevant for timing; shapes match
        return (z0.copy(), x0, h, apre, spre, dt, normals)

    # warm the JIT before timing
    _kern_numba.g_family_block(*g_args())
    _kern_numba.h_family_block(*h_args())

    rows = []
    for name, np_fn, nb_fn, factory in (
            ("g_family_block", _kern_numpy.g_family_block,
             _kern_numba.g_family_block, g_args),
            ("h_family_block", _kern_numpy.h_family_block,
             _kern_numba.h_family_block, h_args)):
        t_np = bench(np_fn, factory, args.repeats)
        t_nb = bench(nb_fn, factory, args.repeats)
        out_np = np_fn(*factory())
        out_nb = nb_fn(*factory())
        a = out_np[0] if isinstance(out_np, tuple) else out_np
        b = out_nb[0] if isinstance(out_nb, tuple) else out_nb
        agree = float(np.max(np.abs(a - b)))
        rows.append((name, t_np, t_nb, t_np / t_nb, agree))

    print(f"{args.paths} paths x {args.steps} steps, best of {args.repeats}")
    print(f"{'kernel':<18}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}{'max |diff|':>14}")
    for name, t_np, t_nb, speedup, agree in rows:
        print(f"{name:<18}{t_np:>12.4f}{t_nb:>12.4f}{speedup:>10.2f}{agree:>14.3e}")


if __name__ == "__main__":
    main()
