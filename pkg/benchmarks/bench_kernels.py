"""Time the compiled kernels against the pure-Python reference.

    python benchmarks/bench_kernels.py --repeat 5
"""

import argparse
import timeit

import numpy as np

from qspinor import _kernels_py as ref

try:
    from qspinor import _kernels as compiled
except ImportError:
    compiled = None


def cases(rng, n_gen, dim, points):
    size = 1 << n_gen
    a = rng.normal(size=size) + 1j * rng.normal(size=size)
    b = rng.normal(size=size) + 1j * rng.normal(size=size)
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m *= 0.9 / np.max(np.abs(np.linalg.eigvals(m)))
    values = rng.normal(size=(points, dim * dim)) + 1j * rng.normal(size=(points, dim * dim))
    neg = size - 1
    return {
        "gp_dense": lambda mod: mod.gp_dense(a, b, neg),
        "neumann_sum": lambda mod: mod.neumann_sum(m, 1e-12, 1000),
        "jackson_sum": lambda mod: mod.jackson_sum(values, 1.0, 0.5),
    }


def best_of(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--generators", type=int, default=6, help="generators in the dense product")
    parser.add_argument("--dim", type=int, default=4, help="matrix size for the series kernels")
    parser.add_argument("--points", type=int, default=200, help="lattice points in the Jackson sum")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if compiled is None:
        print("compiled kernels are not built; only the reference is timed")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<14}{'python (us)':>14}{'cython (us)':>14}{'speedup':>10}")
    for name, call in cases(rng, args.generators, args.dim, args.points).items():
        t_py = best_of(lambda: call(ref), args.repeat) * 1e6
        if compiled is None:
            print(f"{name:<14}{t_py:>14.2f}{'-':>14}{'-':>10}")
            continue
        t_cy = best_of(lambda: call(compiled), args.repeat) * 1e6
        print(f"{name:<14}{t_py:>14.2f}{t_cy:>14.2f}{t_py / t_cy:>9.1f}x")


if __name__ == "__main__":
    main()
