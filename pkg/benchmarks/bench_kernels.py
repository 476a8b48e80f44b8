"""Time the compiled and numpy backends of the point-set kernels.

    python benchmarks/bench_kernels.py [--sizes 100 400 1600] [--dim 3] [--repeat 5]

Each kernel is run on the same random inputs under every available
backend; outputs are cross-checked before timing.
"""
import argparse
import timeit

import numpy as np

from cyclicprox import kernels

KERNELS = ("pairwise", "row_min", "pair_extrema")


def bench(n, dim, repeat, seed=0):
    rng = np.random.default_rng(seed)
    X, Y = rng.normal(size=(n, dim)), rng.normal(size=(n, dim))
    backends = kernels.available_backends()
    rows = []
    for name in KERNELS:
        fn = getattr(kernels, name)
        ref = None
        times = {}
        for bname, mod in sorted(backends.items()):
            out = fn(X, Y, mod)
            if ref is None:
                ref = out
            else:
                np.testing.assert_allclose(out, ref, rtol=1e-12)
            number = max(1, int(2e6 // (n * n)))
            best = min(timeit.repeat(lambda: fn(X, Y, mod), number=number, repeat=repeat)) / number
            times[bname] = best
        rows.append((name, n, times))
    return rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[100, 400, 1600])
    parser.add_argument("--dim", type=int, default=3)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    names = sorted(kernels.available_backends())
    print(f"default backend: {kernels.BACKEND}; dimension {args.dim}")
    header = f"{'kernel':<14}{'n':>7}" + "".join(f"{b + ' [ms]':>16}" for b in names)
    if "cython" in names:
        header += f"{'speedup':>10}"
    print(header)
    for n in args.sizes:
        for name, size, times in bench(n, args.dim, args.repeat):
            line = f"{name:<14}{size:>7}" + "".join(f"{1e3 * times[b]:>16.4f}" for b in names)
            if "cython" in times:
                line += f"{times['python'] / times['cython']:>9.1f}x"
            print(line)


if __name__ == "__main__":
    main()
