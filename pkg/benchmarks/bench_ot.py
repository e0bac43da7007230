"""Compare the compiled and pure-Python network simplex kernels.

Usage::

    python benchmarks/bench_ot.py [--sizes 50x100,100x300,200x1000] [--repeat 3]

Each size is solved cold (fresh tree) and warm (same marginals, perturbed
cost, as inside the conditional-gradient loop). Both kernels must agree on the
optimal cost.
"""

import argparse
import time

import numpy as np

from semeq.ot import _netsimplex_py
from semeq.ot.core import cost_matrix

try:
    from semeq.ot import _netsimplex
except ImportError:  # extension not built
    _netsimplex = None


def _instance(nx, ny, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((nx, 2)) + 1j * rng.standard_normal((nx, 2))
    Y = rng.standard_normal((ny, 2)) + 1j * rng.standard_normal((ny, 2)) + 0.5
    D = cost_matrix(X, Y)
    return D, np.full(nx, 1.0 / nx), np.full(ny, 1.0 / ny), rng


def _time(cls, D, mu, nu, rng, repeat):
    cold, warm = [], []
    for _ in range(repeat):
        t = time.perf_counter()
        s = cls(mu, nu)
        g = s.solve(D)
        cold.append(time.perf_counter() - t)
        D2 = D + 0.05 * rng.standard_normal(D.shape)
        t = time.perf_counter()
        s.solve(D2)
        warm.append(time.perf_counter() - t)
    return min(cold), min(warm), float(np.sum(g * D))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="50x100,100x300,200x1000")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--python-max-arcs", type=int, default=300_000,
                    help="skip the pure-Python kernel above this many arcs")
    args = ap.parse_args(argv)
    print(f"{'size':>10} {'kernel':>8} {'cold [ms]':>10} {'warm [ms]':>10} {'cost':>14}")
    for k, size in enumerate(args.sizes.split(",")):
        nx, ny = (int(v) for v in size.lower().split("x"))
        D, mu, nu, rng = _instance(nx, ny, k)
        costs = {}
        kernels = [("python", _netsimplex_py.TransportSimplex)]
        if _netsimplex is not None:
            kernels.insert(0, ("cython", _netsimplex.TransportSimplex))
        for name, cls in kernels:
            if name == "python" and nx * ny > args.python_max_arcs:
                print(f"{size:>10} {name:>8} {'skipped':>10}")
                continue
            cold, warm, cost = _time(cls, D, mu, nu, np.random.default_rng(k), args.repeat)
            costs[name] = cost
            print(f"{size:>10} {name:>8} {1e3 * cold:10.2f} {1e3 * warm:10.2f} {cost:14.10f}")
        if len(costs) == 2:
            gap = abs(costs["cython"] - costs["python"])
            print(f"{'':>10} agreement: |cost difference| = {gap:.2e}")
            if gap > 1e-9 * max(1.0, abs(costs["cython"])):
                raise SystemExit("kernels disagree on the optimal cost")


if __name__ == "__main__":
    main()
