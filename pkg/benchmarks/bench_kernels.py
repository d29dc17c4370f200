"""Time the numba kernels against their numpy fallbacks (and LAPACK where one exists).

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]

Both flavours are called directly from ``bkflow.kernels.KERNELS``, so the
``BKFLOW_NUMBA`` switch does not matter here.  Compilation happens in a
warm-up call and is not timed.  Without numba installed the "numba" column
times the plain python loops.
"""
import argparse
import timeit

import numpy as np
import scipy.linalg

from bkflow._jit import HAS_NUMBA
from bkflow.kernels import KERNELS


def cases(scale, rng):
    n = max(8, int(200 * scale))
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    A = (X + X.conj().T) / 2
    m = max(64, int(4000 * scale))
    d, e = rng.standard_normal(m), rng.standard_normal(m - 1)
    xs = np.linspace(-3.0, 3.0, 2001)
    sub, sup = rng.standard_normal(m) + 0j, rng.standard_normal(m) + 0j
    diag = 4.0 + rng.standard_normal(m) + 0j
    rhs = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    lams = np.linspace(-1.9, 1.9, max(16, int(2000 * scale)))
    values = rng.uniform(-3, 3, 16)
    ql_n = max(8, int(400 * scale))
    return {
        "householder_tridiagonalize": (
            (A,), lambda: scipy.linalg.hessenberg(A), f"{n}x{n} complex"),
        "tridiagonal_ql": (
            (d[:ql_n], e[:ql_n - 1], np.eye(ql_n)),
            lambda: scipy.linalg.eigh_tridiagonal(d[:ql_n], e[:ql_n - 1]), f"n={ql_n} with vectors"),
        "sturm_count": ((d, e, xs), None, f"n={m}, {xs.size} shifts"),
        "thomas_solve": (
            (sub, diag, sup, rhs),
            lambda: scipy.linalg.solve_banded((1, 1), np.vstack([np.r_[0, sup[:-1]], diag, np.r_[sub[1:], 0]]), rhs),
            f"n={m}"),
        "transfer_products": ((lams, values), None, f"{lams.size} energies x {values.size} sites"),
    }


def best_of(fn, repeat):
    fn()
    number = 1
    while timeit.timeit(fn, number=number) < 0.05 and number < 10_000:
        number *= 4
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0, help="problem size multiplier")
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    print(f"numba available: {HAS_NUMBA}")
    print(f"{'kernel':28s} {'size':28s} {'numba':>10s} {'numpy':>10s} {'lapack':>10s} {'speedup':>8s}")
    for name, (argv_, ref, size) in cases(args.scale, rng).items():
        nb, npy = KERNELS[name]
        # kernels may work in place, so every call gets fresh copies
        t_nb = best_of(lambda: nb(*[a.copy() for a in argv_]), args.repeat)
        t_np = best_of(lambda: npy(*[a.copy() for a in argv_]), args.repeat)
        lapack = f"{best_of(ref, args.repeat) * 1e3:8.3f}ms" if ref else f"{'-':>10s}"
        print(f"{name:28s} {size:28s} {t_nb * 1e3:8.3f}ms {t_np * 1e3:8.3f}ms "
              f"{lapack} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
