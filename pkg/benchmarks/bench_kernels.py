"""Time the numba kernels against the numpy versions on random truth tables.

    python3 benchmarks/bench_kernels.py [--sizes 14 18 22] [--repeat 3]
"""

import argparse
import time

import numpy as np

from scorealign import kernels


def random_table(n, rng):
    table = np.zeros(1 << n, dtype=np.bool_)
    table[rng.integers(0, 1 << n, size=max(4, n))] = True
    return table


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[14, 18, 22])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed")

    rng = np.random.default_rng(0)
    warm = random_table(6, rng)
    kernels.superset_closure_numba(warm.copy(), 6)
    kernels.swing_counts_numba(warm, 6)
    kernels.minimal_worlds_numba(warm, 6)

    print(f"{'kernel':<16} {'n':>3} {'numpy s':>10} {'numba s':>10} {'speedup':>8}")
    for n in args.sizes:
        raw = random_table(n, rng)
        closed = kernels.superset_closure_numpy(raw.copy(), n)
        cases = [
            ("superset_closure", lambda: kernels.superset_closure_numpy(raw.copy(), n),
             lambda: kernels.superset_closure_numba(raw.copy(), n)),
            ("swing_counts", lambda: kernels.swing_counts_numpy(closed, n),
             lambda: kernels.swing_counts_numba(closed, n)),
            ("minimal_worlds", lambda: kernels.minimal_worlds_numpy(closed, n),
             lambda: kernels.minimal_worlds_numba(closed, n)),
        ]
        for name, slow, fast in cases:
            t_np = best_of(slow, args.repeat)
            t_nb = best_of(fast, args.repeat)
            print(f"{name:<16} {n:>3} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
