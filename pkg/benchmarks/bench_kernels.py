"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 3]

Each case runs on identical inputs with both backends, checks that the
outputs agree exactly, and prints the best wall time of ``--repeat`` runs.
"""
import argparse
import time

import numpy as np
import scipy.sparse as sp

from parksent import kernels
from parksent.spatial import _permutation_draws, build_knn_weights


def lisa_case(rng):
    n = 400
    w = build_knn_weights([f"r{i:04d}" for i in range(n)], rng.uniform(30, 45, n), rng.uniform(-120, -75, n), 8)
    z = rng.normal(size=n)
    z -= z.mean()
    draws = _permutation_draws(n, 8, 999, 1)
    return "lisa_perm_counts (n=400, k=8, 999 perms)", "lisa_perm_counts", (z, w.indptr, w.indices, w.weights, draws)


def gini_case(rng):
    m, d = 2000, 30
    X = np.ascontiguousarray(np.round(rng.normal(size=(m, d)), 2))
    y = rng.integers(0, 4, m).astype(np.int64)
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable"), dtype=np.int64)
    return "gini_best_split (2000 x 30, 4 classes)", "gini_best_split", (X, y, order, 4, 1)


def mwu_case(rng):
    return "mwu_null_counts (30 vs 30)", "mwu_null_counts", (30, 30)


def sgd_case(rng):
    X = sp.random(2000, 3000, density=0.005, random_state=1, format="csr")
    X.sort_indices()
    y = np.where(rng.random(2000) < 0.5, 1.0, -1.0)
    order = rng.permutation(2000).astype(np.int64)
    args = (X.data, X.indices.astype(np.int64), X.indptr.astype(np.int64), y, order)
    return "sgd_hinge_epoch (2000 rows, 3000 features)", "sgd_hinge_epoch", args


def run_sgd(mod, args):
    v = np.zeros(3000)
    return mod.sgd_hinge_epoch(*args, v, 1.0, 0.0, 0.0, 1e-4, 1.0, 0.1), v


def best_time(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not kernels.HAS_COMPILED:
        raise SystemExit("compiled kernels are not built; nothing to compare")
    compiled, python = kernels.get_backend("compiled"), kernels.get_backend("python")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<44} {'compiled':>10} {'python':>10} {'speedup':>8}  equal")
    for make in (lisa_case, gini_case, mwu_case, sgd_case):
        label, name, call_args = make(rng)
        if name == "sgd_hinge_epoch":
            tc, oc = best_time(lambda: run_sgd(compiled, call_args), args.repeat)
            tp, op = best_time(lambda: run_sgd(python, call_args), args.repeat)
        else:
            tc, oc = best_time(lambda: getattr(compiled, name)(*call_args), args.repeat)
            tp, op = best_time(lambda: getattr(python, name)(*call_args), args.repeat)
        print(f"{label:<44} {tc * 1e3:>8.2f}ms {tp * 1e3:>8.2f}ms {tp / tc:>7.1f}x  {same(oc, op)}")


if __name__ == "__main__":
    main()
