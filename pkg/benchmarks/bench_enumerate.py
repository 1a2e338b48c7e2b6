"""Compiled enumeration kernel vs the numpy fallback.

    python3 benchmarks/bench_enumerate.py [--sizes 14 16 18 20] [--repeat 3]
"""
import argparse
import random
import time

import numpy as np

from twospin import _enumerate_py
from twospin.core import Graph
from twospin.oracle import _csr

try:
    from twospin import _enumerate
except ImportError:
    _enumerate = None


def random_graph(n, degree, rng):
    edges = set()
    for v in range(n):
        for _ in range(degree // 2):
            u = rng.randrange(n)
            if u != v:
                edges.add((min(u, v), max(u, v)))
    return Graph(n, tuple(sorted(edges)))


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[12, 14, 16, 18, 20])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--occ", action="store_true", help="also accumulate per-vertex occupancy")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    print(f"{'n':>3} {'edges':>5} {'compiled s':>11} {'fallback s':>11} {'speedup':>8}")
    for n in args.sizes:
        g = random_graph(n, 3, rng)
        indptr, indices = _csr(g)
        vclass = np.zeros(n, dtype=np.int32)
        sizes = np.array([n], dtype=np.int64)
        pins = np.full(n, -1, dtype=np.int8)
        call = (n, indptr, indices, vclass, sizes, pins, args.occ)
        t_py, r_py = best_time(lambda: _enumerate_py.histogram(*call), args.repeat)
        if _enumerate is None:
            print(f"{n:>3} {len(g.edges):>5} {'n/a':>11} {t_py:>11.4f} {'':>8}")
            continue
        t_c, r_c = best_time(lambda: _enumerate.histogram(*call), args.repeat)
        assert np.array_equal(r_c[0], r_py[0]), "kernels disagree"
        print(f"{n:>3} {len(g.edges):>5} {t_c:>11.4f} {t_py:>11.4f} {t_py / t_c:>7.1f}x")


if __name__ == "__main__":
    main()
