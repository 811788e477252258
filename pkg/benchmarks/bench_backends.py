"""Compare the compiled and numpy N-body backends.

    python3 benchmarks/bench_backends.py --sizes 250 1000 4000 --kernels blob exact
"""

import argparse
import time

import numpy as np

from epflow import backend
from epflow.kernels import shape_by_name


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[250, 1000, 4000])
    p.add_argument("--kernels", nargs="+", default=["blob", "alpha", "exact"])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--threads", type=int, default=1)
    args = p.parse_args(argv)

    try:
        impls = {"cython": backend.get_impl("cython")}
    except ImportError:
        impls = {}
        print("compiled extension not available; timing numpy only")
    impls["numpy"] = backend.get_impl("python")
    backend.set_threads(args.threads)

    rng = np.random.default_rng(0)
    print(f"{'kernel':<7}{'N':>7}" + "".join(f"{k + ' [s]':>14}" for k in impls) + f"{'speedup':>10}{'ns/pair':>10}")
    for name in args.kernels:
        shape = shape_by_name(name, 0.05)
        for n in args.sizes:
            pos = rng.normal(size=(n, 2))
            gam = rng.normal(size=n)
            t = {k: best_of(lambda m=m: backend.velocity(pos, gam, pos, shape, skip_self=True, impl=m), args.repeat)
                 for k, m in impls.items()}
            fast = min(t.values())
            speed = t["numpy"] / t["cython"] if "cython" in t else 1.0
            print(f"{name:<7}{n:>7}" + "".join(f"{v:>14.4f}" for v in t.values())
                  + f"{speed:>10.1f}{1e9 * fast / (n * n):>10.1f}")


if __name__ == "__main__":
    main()
