"""Compare the compiled and pure-Python kernel backends.

Usage: python benchmarks/bench_backends.py [--count 20000] [--repeat 3]

Times the batched projection kernel and per-matrix SVD on the same seeded
input and checks that both backends return bit-identical arrays.
"""

import argparse
import time

import numpy as np

from tanlap import _backend


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--count", type=int, default=20000, help="number of 3x2 gradient matrices")
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    Xs = rng.standard_normal((args.count, 3, 2))
    Xs[::5, :, 1] = 0.5 * Xs[::5, :, 0]

    names = _backend.available()
    results = {}
    for name in names:
        mod = _backend.module(name)
        t_batch, out = best_of(lambda: mod.batch_projections(Xs, 1e-9, 1e-12), args.repeat)
        small = Xs[:2000]
        t_svd, _ = best_of(lambda: [mod.svd(X) for X in small], args.repeat)
        results[name] = out
        print(f"{name:>7}: batch_projections {t_batch:8.4f} s   svd x{len(small)} {t_svd:8.4f} s")

    if len(names) > 1:
        ref = results[names[0]]
        same = all(all(np.array_equal(a, b) for a, b in zip(ref, results[n])) for n in names[1:])
        print(f"bit-identical across backends: {same}")
    else:
        print("only one backend available; build the extension to compare")


if __name__ == "__main__":
    main()
