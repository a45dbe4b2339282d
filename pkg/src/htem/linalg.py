"""Cholesky-backed kernels for symmetric positive definite matrices."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "NotPositiveDefiniteError",
    "SpdFactor",
    "spd_factorize",
    "spd_solve",
    "spd_log_det",
    "correlated_normal_draw",
]


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Raised when a matrix handed to :func:`spd_factorize` is not SPD."""


@dataclass(frozen=True)
class SpdFactor:
    """Lower-triangular ``L`` with ``L @ L.T == M``."""

    lower: np.ndarray

    @property
    def dimension(self):
        return self.lower.shape[0]


def spd_factorize(m, *, check_symmetry=True):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if check_symmetry:
        scale = np.max(np.abs(m)) if m.size else 0.0
        if np.max(np.abs(m - m.T), initial=0.0) > 1e-12 * max(scale, 1.0):
            raise ValueError("matrix is not symmetric")
    try:
        lower = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from None
    return SpdFactor(lower)


def _check_dim(f, v):
    if v.shape[0] != f.dimension:
        raise ValueError(f"dimension mismatch: factor is {f.dimension}, vector is {v.shape[0]}")


def spd_solve(f, v):
    """``M^{-1} v`` via two triangular solves."""
    v = np.asarray(v, dtype=float)
    _check_dim(f, v)
    z = solve_triangular(f.lower, v, lower=True, check_finite=False)
    return solve_triangular(f.lower, z, lower=True, trans="T", check_finite=False)


def spd_log_det(f):
    return 2.0 * float(np.sum(np.log(np.diag(f.lower))))


def correlated_normal_draw(rng, mean, f):
    """One draw from ``N(mean, A^{-1})`` where ``f`` factors the precision ``A``."""
    mean = np.asarray(mean, dtype=float)
    _check_dim(f, mean)
    z = rng.standard_normal(f.dimension)
    return mean + solve_triangular(f.lower, z, lower=True, trans="T", check_finite=False)
