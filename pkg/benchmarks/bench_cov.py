"""Compare the compiled and NumPy covariance backends.

Usage::

    python3 benchmarks/bench_cov.py [--n 400] [--repeat 3]

Reports the best wall time per backend for a mixed-support covariance
matrix (with and without length-scale gradients) and for the polyline
distance used by the synthetic scenarios, plus the largest absolute
difference between the two backends.
"""

import argparse
import time

import numpy as np

from integral_gp import _backend
from integral_gp.kernels import KernelFamily
from integral_gp.synthetic import Scenario


def mixed_supports(n, dim, rng):
    A = rng.uniform(0, 10, (n, dim))
    H = rng.uniform(0.1, 2.0, (n, dim)) * (rng.random((n, dim)) < 0.6)
    return A, H


def best_of(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=400, help="supports per matrix side")
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--queries", type=int, default=20000, help="polyline distance queries")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    if "compiled" not in _backend.available():
        print("compiled backend not built; only the NumPy fallback is available")
    rng = np.random.default_rng(0)
    A, H = mixed_supports(args.n, args.dim, rng)
    ls = np.full(args.dim, 1.5)
    P = Scenario.from_id(1)._polyline
    qx = rng.uniform(0, 2 * np.pi, args.queries)
    qy = rng.uniform(-0.7, 3.0, args.queries)

    cases = []
    for fam in KernelFamily:
        for grad in (False, True):
            cases.append((f"cov {fam.tag:<9} grad={int(grad)}",
                          lambda fam=fam, grad=grad: _backend.cov_matrix(fam, A, H, A, H, ls, grad, 0, True)[0]))
    cases.append(("polyline distance", lambda: _backend.polyline_distance(P, qx, qy)))

    print(f"{'case':<28}{'python s':>11}{'compiled s':>12}{'speedup':>9}{'max |diff|':>12}")
    for label, fn in cases:
        row = {}
        for b in _backend.available():
            _backend.use(b)
            row[b] = best_of(fn, args.repeat)
        _backend.use(_backend.available()[-1])
        tp, yp = row["python"]
        if "compiled" in row:
            tc, yc = row["compiled"]
            print(f"{label:<28}{tp:>11.4f}{tc:>12.4f}{tp / tc:>9.1f}{np.max(np.abs(yp - yc)):>12.2e}")
        else:
            print(f"{label:<28}{tp:>11.4f}{'-':>12}{'-':>9}{'-':>12}")


if __name__ == "__main__":
    main()
