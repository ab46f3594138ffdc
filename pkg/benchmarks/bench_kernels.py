"""Time the compiled EM kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 20]
"""
import argparse
import timeit

import numpy as np

from disclapmix import _kernels_py

try:
    from disclapmix import _kernels
except ImportError:
    _kernels = None


def problem(n, c, r, seed=0):
    rng = np.random.default_rng(seed)
    db = rng.integers(5, 35, size=(n, r)).astype(np.int64)
    centers = np.ascontiguousarray(db[rng.choice(n, c, replace=False)])
    log_p = np.ascontiguousarray(np.log(rng.uniform(0.05, 0.6, (c, r))))
    log_tau = np.log(np.full(c, 1.0 / c))
    resp = np.ascontiguousarray(rng.dirichlet(np.ones(c), size=n))
    order = np.ascontiguousarray(np.argsort(db, axis=0, kind="stable"), dtype=np.int64)
    return db, centers, log_p, log_tau, resp, order


def bench(impl, args, repeat):
    db, centers, log_p, log_tau, resp, order = args
    calls = {
        "e_step": lambda: impl.e_step(db, centers, log_p, log_tau),
        "abs_dev_sums": lambda: impl.abs_dev_sums(db, centers, resp),
        "weighted_medians": lambda: impl.weighted_medians(db, order, resp),
    }
    return {name: min(timeit.repeat(fn, number=1, repeat=repeat)) for name, fn in calls.items()}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled kernels not built; nothing to compare")
        return
    print(f"{'shape (n,c,r)':>16} {'kernel':>17} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8}")
    for shape in [(500, 5, 7), (5000, 5, 7), (20000, 10, 12)]:
        data = problem(*shape)
        slow = bench(_kernels_py, data, args.repeat)
        fast = bench(_kernels, data, args.repeat)
        for name in slow:
            print(f"{str(shape):>16} {name:>17} {slow[name] * 1e3:10.3f} {fast[name] * 1e3:10.3f} "
                  f"{slow[name] / fast[name]:7.1f}x")


if __name__ == "__main__":
    main()
