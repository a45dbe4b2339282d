"""Compiled inner loops for the sampler: model-weight terms and grid sums."""

import math

import numba
import numpy as np


@numba.njit(cache=True)
def model_terms(X, y, idx, inv_sigma2, ridge):
    """Cholesky factor of ``A = X_g' W X_g + ridge I`` and ``z = L^{-1} X_g' W y``.

    Returns ``(L, z, ok)``; ``ok`` is False when ``A`` is not numerically
    positive definite.
    """
    n = X.shape[0]
    k = idx.shape[0]
    A = np.zeros((k, k))
    b = np.zeros(k)
    xi = np.empty(k)
    for i in range(n):
        w = inv_sigma2[i]
        for r in range(k):
            xi[r] = X[i, idx[r]]
        wy = w * y[i]
        for r in range(k):
            xr = xi[r] * w
            b[r] += xi[r] * wy
            for c in range(r + 1):
                A[r, c] += xr * xi[c]
    L = np.zeros((k, k))
    ok = True
    for j in range(k):
        s = A[j, j] + ridge
        for m in range(j):
            s -= L[j, m] * L[j, m]
        if not s > 0.0:
            ok = False
            break
        d = math.sqrt(s)
        L[j, j] = d
        for r in range(j + 1, k):
            s = A[r, j]
            for m in range(j):
                s -= L[r, m] * L[j, m]
            L[r, j] = s / d
    z = np.zeros(k)
    if ok:
        for r in range(k):
            s = b[r]
            for m in range(r):
                s -= L[r, m] * z[m]
            z[r] = s / L[r, r]
    return L, z, ok


@numba.njit(cache=True)
def back_solve(L, v):
    """Solve ``L' x = v`` for lower-triangular ``L``."""
    k = L.shape[0]
    x = np.empty(k)
    for r in range(k - 1, -1, -1):
        s = v[r]
        for m in range(r + 1, k):
            s -= L[m, r] * x[m]
        x[r] = s / L[r, r]
    return x


@numba.njit(cache=True)
def grid_kernel_sums(e2, eta, branch):
    """Per grid value: sum_i sqrt(eta (eta + e2_i)) (branch 0) or sum_i log(eta + e2_i) (branch 1)."""
    K = eta.shape[0]
    n = e2.shape[0]
    out = np.zeros(K)
    for k in range(K):
        g = eta[k]
        s = 0.0
        if branch == 0:
            for i in range(n):
                s += math.sqrt(g * (g + e2[i]))
        else:
            for i in range(n):
                s += math.log(g + e2[i])
        out[k] = s
    return out

