"""Hot numeric kernels, JIT-compiled with numba when available.

Three inner loops dominate runtime: the dual coordinate descent sweep of
the linear SVM trainer and the two exhaustive permutation scans used by
the causal stage (d! permutations for d <= 8). Each has a pure-numpy
fallback; set ``EWOMCAUSAL_NO_NUMBA=1`` to force it. The selected backend
is fixed at import time and reported by :func:`backend_name`.

``benchmarks/bench_kernels.py`` times both paths side by side.
"""

from __future__ import annotations

import os

import numpy as np

_ENV_FLAG = "EWOMCAUSAL_NO_NUMBA"


def _numba_requested() -> bool:
    if os.environ.get(_ENV_FLAG, "").strip().lower() in {"1", "true", "yes"}:
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USE_NUMBA = _numba_requested()


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


# --------------------------------------------------------------------------
# SVM dual coordinate descent (hinge loss, box-constrained dual)
#
# One shared body for both backends: every operation in the sweep is either
# scalar arithmetic or a vectorized numpy call, so the compiled and the
# interpreted path run the identical floating-point sequence and return
# bitwise-equal weights.
# --------------------------------------------------------------------------


def _svm_dual_cd_body(X, y, c, tol, max_iter, order):
    # X carries the bias as a trailing all-ones column; the caller owns that.
    n, d = X.shape
    w = np.zeros(d)
    alpha = np.zeros(n)
    qdiag = np.empty(n)
    for i in range(n):
        qdiag[i] = np.dot(X[i], X[i])
    epochs = 0
    max_pg = np.inf
    for _ in range(max_iter):
        epochs += 1
        max_pg = 0.0
        for t in range(n):
            i = order[t]
            g = y[i] * np.dot(w, X[i]) - 1.0
            if alpha[i] == 0.0:
                pg = min(g, 0.0)
            elif alpha[i] == c:
                pg = max(g, 0.0)
            else:
                pg = g
            if abs(pg) > max_pg:
                max_pg = abs(pg)
            if pg != 0.0:
                old = alpha[i]
                new = old - g / qdiag[i]
                if new < 0.0:
                    new = 0.0
                elif new > c:
                    new = c
                alpha[i] = new
                if new != old:
                    w += ((new - old) * y[i]) * X[i]
        if max_pg < tol:
            break
    return w, epochs, max_pg


# --------------------------------------------------------------------------
# Permutation scans. The numba versions loop; the numpy fallbacks use
# fancy-indexing gathers over the whole permutation table at once
# (40320 x 8 for d = 8, a few MB).
# --------------------------------------------------------------------------


def _perm_diag_costs_np(abs_w: np.ndarray, perms: np.ndarray) -> np.ndarray:
    d = perms.shape[1]
    diags = abs_w[perms, np.arange(d)]
    return (1.0 / np.maximum(diags, 1e-300)).sum(axis=1)


def _perm_upper_residuals_np(b: np.ndarray, perms: np.ndarray) -> np.ndarray:
    d = perms.shape[1]
    b2 = b * b
    gathered = b2[perms[:, :, None], perms[:, None, :]]
    iu, ju = np.triu_indices(d, k=1)
    return gathered[:, iu, ju].sum(axis=1)


def _perm_diag_costs_body(abs_w, perms):
    m, d = perms.shape
    out = np.empty(m)
    for p in range(m):
        cost = 0.0
        for i in range(d):
            a = abs_w[perms[p, i], i]
            if a < 1e-300:
                a = 1e-300
            cost += 1.0 / a
        out[p] = cost
    return out


def _perm_upper_residuals_body(b, perms):
    m, d = perms.shape
    out = np.empty(m)
    for p in range(m):
        r = 0.0
        for i in range(d):
            for j in range(i + 1, d):
                v = b[perms[p, i], perms[p, j]]
                r += v * v
        out[p] = r
    return out


_svm_dual_cd_py = _svm_dual_cd_body

if USE_NUMBA:
    from numba import njit

    svm_dual_cd = njit(cache=True)(_svm_dual_cd_body)
    perm_diag_costs = njit(cache=True)(_perm_diag_costs_body)
    perm_upper_residuals = njit(cache=True)(_perm_upper_residuals_body)
else:
    svm_dual_cd = _svm_dual_cd_body
    perm_diag_costs = _perm_diag_costs_np
    perm_upper_residuals = _perm_upper_residuals_np
