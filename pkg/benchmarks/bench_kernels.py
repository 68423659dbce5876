"""Compare the compiled and numpy kernel backends on random signals.

Usage: ``python benchmarks/bench_kernels.py [--segments N] [--samples M] [--repeat R]``
"""
import argparse
import timeit

import numpy as np

from servicebond import kernels


def make_case(segments, samples, seed=0):
    rng = np.random.default_rng(seed)
    horizon = 1e6
    starts = np.unique(np.concatenate(([0.0], rng.uniform(0, horizon, segments - 1))))
    values = rng.uniform(0, 10, size=(starts.size, 2))
    ts = np.sort(rng.uniform(0, horizon, samples))
    return starts, values, ts, np.array([5.0, 5.0]), np.array([1.0, -1.0])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--segments", type=int, nargs="+", default=[10 ** 3, 10 ** 4, 10 ** 5])
    ap.add_argument("--samples", type=int, default=10 ** 5)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    impls = kernels.backends()
    print(f"backends: {', '.join(impls)} (active: {kernels.BACKEND})")
    print(f"{'segments':>9} {'samples':>8} " + " ".join(f"{n + ' ms':>12}" for n in impls) + "  speedup")
    for n in args.segments:
        case = make_case(n, args.samples)
        results = {}
        for name, impl in impls.items():
            res = kernels.under_counts(*case, impl=impl)
            results[name] = res
            best = min(timeit.repeat(lambda: kernels.under_counts(*case, impl=impl),
                                     number=10, repeat=args.repeat)) / 10
            results[name + "_t"] = best * 1e3
        counts = [np.asarray(results[k]) for k in impls]
        assert all(np.array_equal(counts[0], c) for c in counts[1:]), "backends disagree"
        times = [results[k + "_t"] for k in impls]
        speed = f"{times[0] / times[1]:.2f}x" if len(times) > 1 else "n/a"
        print(f"{n:>9} {args.samples:>8} " + " ".join(f"{t:>12.3f}" for t in times) + f"  {speed}")


if __name__ == "__main__":
    main()
