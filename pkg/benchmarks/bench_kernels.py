"""Benchmark the njit kernels against their pure-numpy fallbacks.

Usage:
    python benchmarks/bench_kernels.py [--repeat N] [--grid N]

The active variant is chosen at import time by LSAI_PURE_NUMPY; this
script times both implementations directly so one invocation covers the
whole comparison. Expect the loop variants to win once numba has
compiled them (first call pays compilation; we warm up before timing).
"""

import argparse
import time

import numpy as np

from lsai import kernels


def bench(fn, args, repeat):
    fn(*args)  # warm-up (numba compilation, cache touch)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--grid", type=int, default=600,
                    help="cells per side (600 matches the 3 km arena)")
    ap.add_argument("--robots", type=int, default=60)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    n, cell = args.grid, 5.0
    arena = n * cell
    xs = rng.uniform(0, arena, args.robots)
    ys = rng.uniform(0, arena, args.robots)
    mask = rng.random(n * n) < 0.3

    cases = [
        ("disk_cells", kernels._disk_cells_loop, kernels._disk_cells_numpy,
         (arena / 2, arena / 2, 100.0, n, cell)),
        ("collision_pairs", kernels._collision_pairs_loop,
         kernels._collision_pairs_numpy, (xs, ys, 2.0)),
        ("nearest_open_cell", kernels._nearest_open_cell_loop,
         kernels._nearest_open_cell_numpy,
         (arena / 2, arena / 2, mask, n, cell)),
    ]

    if kernels.USE_NUMBA:
        from numba import njit
        compiled = {name: njit(cache=True)(loop) for name, loop, _, _ in cases}
    else:
        compiled = {}
        print("numba unavailable or disabled; timing plain loops instead")

    print(f"grid {n}x{n}, {args.robots} robots, repeat={args.repeat}")
    print(f"{'kernel':>20} {'loop' + ('(njit)' if compiled else ''):>12} "
          f"{'numpy':>12} {'ratio':>8}")
    for name, loop, vec, a in cases:
        t_loop = bench(compiled.get(name, loop), a, args.repeat)
        t_np = bench(vec, a, args.repeat)
        print(f"{name:>20} {t_loop * 1e3:>10.3f}ms {t_np * 1e3:>10.3f}ms "
              f"{t_np / t_loop:>7.2f}x")
        assert np.array_equal(np.atleast_1d(loop(*a)),
                              np.atleast_1d(vec(*a))), f"{name} variants differ"
    print("variants agree on all benchmark inputs")


if __name__ == "__main__":
    main()
