"""Compiled core vs NumPy fallback for the batched matrix exponential.

    python benchmarks/bench_kernels.py [--sizes 3,4,6] [--points 4096] [--repeat 5]

Prints one row per (N, backend): best wall time, points per second and the
max relative deviation of the compiled result from the fallback.
"""

import argparse
import time

import numpy as np

from mixedorder import _expm_py

try:
    from mixedorder import _expm_core
except ImportError:  # extension not built
    _expm_core = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="2,3,4,6")
    ap.add_argument("--points", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    print(f"{'N':>3} {'backend':>8} {'seconds':>10} {'points/s':>12} {'max rel dev':>12}")
    for N in (int(s) for s in args.sizes.split(",")):
        # norms spread over four decades, as on a frequency grid
        scale = np.geomspace(0.01, 100.0, args.points)[:, None, None]
        A = (rng.normal(size=(args.points, N, N)) + 1j * rng.normal(size=(args.points, N, N))) * scale / N
        t_py, (E_py, _) = best_of(lambda: _expm_py.expm_batch(A, 1e4, args.threads), args.repeat)
        print(f"{N:>3} {'python':>8} {t_py:>10.4f} {args.points / t_py:>12.0f} {'-':>12}")
        if _expm_core is None:
            print(f"{N:>3} {'cython':>8} {'not built':>10}")
            continue
        t_cy, (E_cy, _) = best_of(lambda: _expm_core.expm_batch(A, 1e4, args.threads), args.repeat)
        dev = np.max(np.abs(E_cy - E_py) / np.abs(E_py).max(axis=(-2, -1), keepdims=True))
        print(f"{N:>3} {'cython':>8} {t_cy:>10.4f} {args.points / t_cy:>12.0f} {dev:>12.2e}"
              f"   speedup {t_py / t_cy:.1f}x")


if __name__ == "__main__":
    main()
