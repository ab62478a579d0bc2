"""Compare the compiled kernels with the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from cvtnet import _pykernels

try:
    from cvtnet import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    for n in (120, 500, 2000):
        x, y = rng.normal(size=n), rng.integers(0, 10, n).astype(float)
        yield f"kendall_counts n={n}", "kendall_counts", (x, y)
    for n, d in ((120, 4), (1000, 8), (5000, 16)):
        X = rng.normal(size=(n, d)).round(2)
        y = rng.integers(0, 3, n).astype(np.intp)
        feats = np.arange(d, dtype=np.intp)
        yield f"best_split n={n} d={d}", "best_split", (X, y, 3, feats, d)


def best_time(fn, args, repeat):
    timer = timeit.Timer(lambda: fn(*args))
    loops, _ = timer.autorange()
    return min(timer.repeat(repeat, loops)) / loops


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if _ckernels is None:
        print("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
    rng = np.random.default_rng(0)
    print(f"{'case':<28}{'numpy [ms]':>12}{'cython [ms]':>13}{'speedup':>9}")
    for label, name, call in cases(rng):
        py = best_time(getattr(_pykernels, name), call, args.repeat)
        if _ckernels is None:
            print(f"{label:<28}{py * 1e3:>12.3f}{'-':>13}{'-':>9}")
            continue
        cy = best_time(getattr(_ckernels, name), call, args.repeat)
        same = getattr(_pykernels, name)(*call) == getattr(_ckernels, name)(*call)
        print(f"{label:<28}{py * 1e3:>12.3f}{cy * 1e3:>13.3f}{py / cy:>8.1f}x"
              f"{'' if same else '  (results differ!)'}")


if __name__ == "__main__":
    main()
