"""Evaluation statistics for simulation replicates and real-data fits."""

import csv
import math
import os
from dataclasses import asdict, dataclass, fields

import numpy as np

__all__ = [
    "rmse",
    "rmse_subset",
    "relative_rmse",
    "tpr_tnr",
    "coverage_and_width",
    "mead",
    "ReplicateMetrics",
    "METRICS_HEADER",
    "append_metrics_csv",
    "read_metrics_csv",
]


def _pair(a, b, what):
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError(f"{what}: length mismatch ({a.size} vs {b.size})")
    return a, b


def rmse(beta_true, beta_hat):
    """Root mean squared error over all coefficients, intercept included."""
    t, h = _pair(beta_true, beta_hat, "rmse")
    if t.size == 0:
        raise ValueError("rmse of empty vectors")
    return float(np.sqrt(np.mean((t - h) ** 2)))


def rmse_subset(beta_true, beta_hat, mask):
    """RMSE restricted to coordinates where ``mask`` is true; None if the subset is empty."""
    t, h = _pair(beta_true, beta_hat, "rmse_subset")
    mask = np.asarray(mask, dtype=bool).ravel()
    if mask.shape != t.shape:
        raise ValueError("rmse_subset: mask length mismatch")
    if not mask.any():
        return None
    return float(np.sqrt(np.mean((t[mask] - h[mask]) ** 2)))


def relative_rmse(rmses):
    """Divide by the smallest entry; all-zero input maps to ones."""
    r = np.asarray(rmses, dtype=float).ravel()
    if r.size == 0:
        raise ValueError("relative_rmse of an empty vector")
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise ValueError("RMSE values must be finite and non-negative")
    low = r.min()
    if low == 0.0:
        if np.all(r == 0.0):
            return np.ones_like(r)
        raise ValueError("relative_rmse needs all values positive or all zero")
    out = r / low
    out[r == low] = 1.0
    return out


def tpr_tnr(gamma_hat, gamma_true):
    """True positive and true negative rates; an undefined rate is returned as None."""
    g, t = _pair(gamma_hat, gamma_true, "tpr_tnr")
    g = g.astype(bool)
    t = t.astype(bool)
    n_sig = int(t.sum())
    n_noise = t.size - n_sig
    tpr = float(np.sum(g & t) / n_sig) if n_sig else None
    tnr = float(np.sum(~g & ~t) / n_noise) if n_noise else None
    return tpr, tnr


def coverage_and_width(intervals, y_test):
    """Fraction of ``y_test`` inside its closed interval, and the median width.

    ``intervals`` is an (m, 2) array-like of (lower, upper) pairs.
    """
    iv = np.asarray(intervals, dtype=float)
    y = np.asarray(y_test, dtype=float).ravel()
    if iv.ndim != 2 or iv.shape[1] != 2:
        raise ValueError("intervals must have shape (m, 2)")
    if iv.shape[0] != y.size:
        raise ValueError(f"coverage_and_width: {iv.shape[0]} intervals for {y.size} responses")
    if y.size == 0:
        raise ValueError("no test points")
    lo, hi = iv[:, 0], iv[:, 1]
    covered = (y >= lo) & (y <= hi)
    return float(covered.mean()), float(np.median(hi - lo))


def mead(pred, actual):
    """Median absolute deviation between predictions and outcomes."""
    p, a = _pair(pred, actual, "mead")
    if p.size == 0:
        raise ValueError("mead of empty vectors")
    return float(np.median(np.abs(p - a)))


@dataclass(frozen=True)
class ReplicateMetrics:
    """One simulation replicate. Rates that are undefined are stored as NaN."""

    scenario: str
    replicate: int
    mode: str
    seed: int
    rmse_all: float
    rmse_signal: float
    rmse_noise: float
    tpr: float
    tnr: float
    coverage: float
    median_width: float
    mead: float
    p_hyperbolic: float
    eta_mode: float
    mc3_acceptance: float

    def as_row(self):
        return [_fmt(getattr(self, f.name)) for f in fields(self)]

    def to_dict(self):
        d = asdict(self)
        return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}


METRICS_HEADER = tuple(f.name for f in fields(ReplicateMetrics))


def _fmt(v):
    if isinstance(v, float):
        return "NA" if math.isnan(v) else repr(v)
    return str(v)


def append_metrics_csv(path, rows):
    """Append rows, writing the fixed header first if the file is new or empty."""
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(METRICS_HEADER)
        for r in rows:
            w.writerow(r.as_row())


def read_metrics_csv(path):
    types = {f.name: f.type for f in fields(ReplicateMetrics)}
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != METRICS_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for rec in reader:
            vals = {}
            for k, v in rec.items():
                t = types[k]
                if t in (float, "float"):
                    vals[k] = math.nan if v == "NA" else float(v)
                elif t in (int, "int"):
                    vals[k] = int(v)
                else:
                    vals[k] = v
            out.append(ReplicateMetrics(**vals))
    return out
