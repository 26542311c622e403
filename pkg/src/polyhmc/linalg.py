"""Small dense linear-algebra kernels shared by the geometry and integrator.

The matrices involved are tiny (d = polytope dimension, usually < 50), so
hand-rolled factorizations and substitutions beat LAPACK calls once dispatch
overhead is counted, and they compile cleanly into the jitted hot loops.
All routines treat inputs as read-only and allocate their outputs.
"""

import numpy as np

from ._jit import njit


@njit(cache=True)
def chol_lower(g):
    """Lower Cholesky factor of a symmetric matrix.

    Returns (L, ok). ok is False when a pivot is non-positive or non-finite,
    i.e. the matrix is not numerically positive definite; L is then garbage
    and must be ignored by the caller.
    """
    d = g.shape[0]
    L = np.zeros((d, d))
    for j in range(d):
        acc = g[j, j]
        for k in range(j):
            acc -= L[j, k] * L[j, k]
        if not np.isfinite(acc) or acc <= 0.0:
            return L, False
        L[j, j] = np.sqrt(acc)
        for i in range(j + 1, d):
            s = g[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            L[i, j] = s / L[j, j]
    return L, True


@njit(cache=True)
def solve_lower(L, rhs):
    """Forward substitution: solve L y = rhs."""
    d = rhs.shape[0]
    y = np.empty(d)
    for i in range(d):
        s = rhs[i]
        for k in range(i):
            s -= L[i, k] * y[k]
        y[i] = s / L[i, i]
    return y


@njit(cache=True)
def solve_lower_t(L, rhs):
    """Backward substitution: solve Lᵀ y = rhs."""
    d = rhs.shape[0]
    y = np.empty(d)
    for i in range(d - 1, -1, -1):
        s = rhs[i]
        for k in range(i + 1, d):
            s -= L[k, i] * y[k]
        y[i] = s / L[i, i]
    return y


@njit(cache=True)
def solve_spd(L, rhs):
    """Solve (L Lᵀ) y = rhs by two triangular substitutions."""
    return solve_lower_t(L, solve_lower(L, rhs))


@njit(cache=True)
def norm_metric(L, v):
    """‖v‖ in the metric g = L Lᵀ, computed as ‖Lᵀ v‖₂."""
    d = v.shape[0]
    acc = 0.0
    for i in range(d):
        s = 0.0
        for k in range(i, d):
            s += L[k, i] * v[k]
        acc += s * s
    return np.sqrt(acc)


@njit(cache=True)
def norm_metric_inv(L, p):
    """‖p‖ in the inverse metric g⁻¹, computed as ‖L⁻¹ p‖₂."""
    y = solve_lower(L, p)
    acc = 0.0
    for i in range(y.shape[0]):
        acc += y[i] * y[i]
    return np.sqrt(acc)


@njit(cache=True)
def quad_inv(L, p):
    """pᵀ (L Lᵀ)⁻¹ p."""
    y = solve_lower(L, p)
    acc = 0.0
    for i in range(y.shape[0]):
        acc += y[i] * y[i]
    return acc
