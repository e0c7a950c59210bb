"""Compiled vs pure-Python kernels: timing and agreement.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one row per workload with the best-of-N wall time of each backend,
the speedup and the maximum absolute difference of the results.
"""
import argparse
import timeit

import numpy as np

from optolie import _pykernels
from optolie.fock import coherent_state

try:
    from optolie import _core
except ImportError:
    _core = None

S = np.array([2, 1, 0, -1, -2, 0], float)


def coefficient_workload(periods, Omega, g0=0.1, g1=0.01, n=4.0):
    t = np.linspace(0, 2 * np.pi * periods, 40 * periods + 1)
    c = np.array([g1, -g0, 2 * g1, -g0, g1, 0.0])
    args = (t, 1.0, n, c, S, np.zeros(6, complex), Omega, 10.0 + g1, 2.5, 1e-12, 1e-12)
    return lambda mod: mod.integrate_wn(*args)


def wigner_workload(dim, points):
    v = coherent_state(2.0, dim).amplitudes * np.exp(1j * np.arange(dim) ** 2 / 7)
    rho = np.outer(v, v.conj())
    ax = np.linspace(-6, 6, points)
    return lambda mod: mod.wigner_kernel(rho, ax, ax)


WORKLOADS = {
    "coefficients, 10 periods, undriven": coefficient_workload(10, 0.0),
    "coefficients, 50 periods, driven": coefficient_workload(50, 0.25),
    "wigner 24 levels, 101x101": wigner_workload(24, 101),
    "wigner 40 levels, 201x201": wigner_workload(40, 201),
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    a = ap.parse_args(argv)
    if _core is None:
        raise SystemExit("compiled extension not built; run: python3 setup.py build_ext --inplace")
    print(f"{'workload':<38s} {'compiled':>10s} {'python':>10s} {'speedup':>8s} {'max diff':>9s}")
    for name, work in WORKLOADS.items():
        times = {}
        for label, mod in (("compiled", _core), ("python", _pykernels)):
            number = 1 if label == "python" else 5
            best = min(timeit.repeat(lambda: work(mod), number=number, repeat=a.repeat))
            times[label] = best / number
        diff = np.max(np.abs(np.asarray(work(_core)) - np.asarray(work(_pykernels))))
        print(f"{name:<38s} {times['compiled'] * 1e3:8.2f}ms {times['python'] * 1e3:8.1f}ms "
              f"{times['python'] / times['compiled']:7.1f}x {diff:9.1e}")


if __name__ == "__main__":
    main()
