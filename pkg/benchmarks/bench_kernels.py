"""Time the compiled inner-loop kernels against the numpy fallback.

Both implementations are imported directly, so the MULTITIK_NO_NUMBA
switch plays no role here; this is the measurement that justifies (or
indicts) carrying the compiled path at all. Each row reports the best
wall time over --repeats runs of an identical workload, plus the max
elementwise disagreement between the two results.

Usage: python3 benchmarks/bench_kernels.py [--sizes 100,300,600] [--repeats 3]
"""

import argparse
import time

import numpy as np

from multitik.kernels import numba_impl, numpy_impl
from multitik.solvers import _dtd


def enet_workload(n, seed=0):
    rng = np.random.default_rng(seed)
    K = rng.standard_normal((n + 20, n))
    u_true = np.zeros(n)
    k = max(4, n // 25)
    u_true[rng.choice(n, k, replace=False)] = rng.uniform(0.5, 2.0, k)
    g = K @ u_true + 0.01 * rng.standard_normal(n + 20)
    G = K.T @ K
    b = K.T @ g
    c0 = 0.5 * float(g @ g)
    e1, e2 = 1e-2, 1e-3
    lip = float(np.linalg.eigvalsh(G)[-1]) + e2
    hist = np.empty(20001)

    def run(impl):
        return impl.fista_enet(
            G, b, c0, e1, e2, lip, np.zeros(n), 1e-10, 20000, hist
        )

    return run


def admm_workload(n, seed=1):
    rng = np.random.default_rng(seed)
    K = np.eye(n) + 0.1 * rng.standard_normal((n, n))
    u_true = np.zeros(n)
    u_true[n // 4 : n // 2] = 1.0
    g = K @ u_true + 0.01 * rng.standard_normal(n)
    h = 1.0 / n
    e1, e2 = 1e-4, 1e-3
    rho = e2
    A = K.T @ K + (2.0 * e1 / h + rho) * _dtd(n)
    L = np.linalg.cholesky(A)
    Ktg = K.T @ g

    def run(impl):
        return impl.admm_h1tv(
            L, Ktg, np.zeros(n - 1), np.zeros(n - 1), rho, e2 / rho, 1e-10, 20000
        )

    return run


def best_time(fn, repeats):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="100,300,600",
                    help="comma-separated problem sizes")
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    print(f"{'kernel':<12}{'n':>6}{'iters':>8}{'numpy [s]':>12}"
          f"{'numba [s]':>12}{'speedup':>9}{'max |du|':>11}")
    for name, make in (("fista_enet", enet_workload), ("admm_h1tv", admm_workload)):
        for n in sizes:
            run = make(n)
            run(numba_impl)  # JIT warmup outside the timed region
            t_np, r_np = best_time(lambda: run(numpy_impl), args.repeats)
            t_nb, r_nb = best_time(lambda: run(numba_impl), args.repeats)
            du = float(np.max(np.abs(r_np[0] - r_nb[0])))
            iters = int(r_nb[2] if name == "fista_enet" else r_nb[3])
            print(f"{name:<12}{n:>6}{iters:>8}{t_np:>12.4f}"
                  f"{t_nb:>12.4f}{t_np / t_nb:>9.2f}{du:>11.2e}")


if __name__ == "__main__":
    main()
