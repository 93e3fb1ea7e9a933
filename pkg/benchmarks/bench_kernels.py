"""Time the JIT kernels against their pure-numpy fallbacks.

Run as ``python benchmarks/bench_kernels.py``. Imports both
implementations directly, so no env flag juggling is needed; when numba
is not installed only the fallback column is reported.
"""

from __future__ import annotations

import itertools
import time

import numpy as np

from ewomcausal import _kernels


def _timeit(fn, *args, repeat: int = 5) -> float:
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_svm():
    rng = np.random.default_rng(0)
    n, d = 2000, 60
    X = rng.normal(size=(n, d))
    w_true = rng.normal(size=d)
    y = np.where(X @ w_true >= 0, 1.0, -1.0)
    X_aug = np.ascontiguousarray(np.hstack([X, np.ones((n, 1))]))
    order = rng.permutation(n).astype(np.int64)
    args = (X_aug, y, 1.0, 1e-4, 200, order)
    return "svm_dual_cd (2000x60)", args


def bench_perm_diag():
    rng = np.random.default_rng(1)
    d = 8
    w = rng.normal(size=(d, d))
    perms = np.array(list(itertools.permutations(range(d))), dtype=np.int64)
    return "perm_diag_costs (8! perms)", (np.abs(w), perms)


def bench_perm_upper():
    rng = np.random.default_rng(2)
    d = 8
    b = rng.normal(size=(d, d))
    np.fill_diagonal(b, 0.0)
    perms = np.array(list(itertools.permutations(range(d))), dtype=np.int64)
    return "perm_upper_residuals (8! perms)", (b, perms)


def main() -> None:
    cases = [
        (bench_svm(), _kernels._svm_dual_cd_py, "svm_dual_cd"),
        (bench_perm_diag(), _kernels._perm_diag_costs_np, "perm_diag_costs"),
        (bench_perm_upper(), _kernels._perm_upper_residuals_np, "perm_upper_residuals"),
    ]
    print(f"active backend: {_kernels.backend_name()}")
    print(f"{'kernel':<34}{'numpy (ms)':>12}{'numba (ms)':>12}{'speedup':>10}")
    for (label, args), numpy_fn, attr in cases:
        t_np = _timeit(numpy_fn, *args)
        if _kernels.USE_NUMBA:
            jit_fn = getattr(_kernels, attr)
            jit_fn(*args)  # compile outside the timed region
            t_nb = _timeit(jit_fn, *args)
            print(f"{label:<34}{t_np * 1e3:>12.2f}{t_nb * 1e3:>12.2f}{t_np / t_nb:>10.1f}x")
        else:
            print(f"{label:<34}{t_np * 1e3:>12.2f}{'n/a':>12}{'n/a':>10}")


if __name__ == "__main__":
    main()
