#!/usr/bin/env python3
"""Benchmark: compiled vs pure-Python velocity-Verlet kernel.

The workload is the package's hot loop: a repulsive-Coulomb ensemble with
per-particle adaptive substeps (thousands of substeps per nominal step
near close approaches).  Run after `pip install -e .`:

    python benchmarks/bench_verlet.py [n_particles] [T]
"""

import sys
import time

import numpy as np

import qcmd._verlet_py as vpy
import qcmd.classical as cl
from qcmd.potential import PairInteraction, PotentialSpec, Zero


def workload(n):
    rng = np.random.default_rng(42)
    x = np.zeros((n, 6))
    x[:, 2] = -0.8 + 0.05 * rng.normal(size=n)
    x[:, 5] = 0.8 + 0.05 * rng.normal(size=n)
    x[:, 0:2] = 0.05 * rng.normal(size=(n, 2))
    x[:, 3:5] = 0.05 * rng.normal(size=(n, 2))
    p = np.zeros((n, 6))
    p[:, 2] = 1.0 + 0.1 * rng.normal(size=n)
    p[:, 5] = -1.0 - 0.1 * rng.normal(size=n)
    return x, p


def run(kernel, x, p, spec, T, dt=1e-3, eta=0.05):
    x = x.copy()
    p = p.copy()
    status = np.zeros(len(x), dtype=np.int64)
    layout, code, sparams, pair_idx, pair_c, cmax = cl._encode_spec(spec)
    t0 = time.perf_counter()
    kernel.advance(x, p, status, T, dt, eta, spec.guard_radius,
                   layout, code, sparams, pair_idx, pair_c, cmax)
    return time.perf_counter() - t0, x, p


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
    T = float(sys.argv[2]) if len(sys.argv) > 2 else 1.5
    spec = PotentialSpec(6, "nuclear", Zero(), (PairInteraction(0, 1, 1.0),))
    x, p = workload(n)

    kernels = [("python", vpy)]
    try:
        from qcmd import _verlet

        kernels.insert(0, ("compiled", _verlet))
    except ImportError:
        print("compiled kernel not built; benchmarking fallback only")

    results = {}
    for name, kernel in kernels:
        dt_run, xf, pf = run(kernel, x, p, spec, T)
        results[name] = (dt_run, xf, pf)
        print(f"{name:>9}: {dt_run:8.3f} s   ({n} particles, T = {T})")

    if len(results) == 2:
        tc, xc, _ = results["compiled"]
        tp, xp, _ = results["python"]
        print(f"  speedup: {tp / tc:.1f}x")
        print(f"  max trajectory deviation: {np.max(np.abs(xc - xp)):.3e}")


if __name__ == "__main__":
    main()
