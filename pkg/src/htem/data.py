"""Synthetic scenarios, CSV ingestion and preprocessing.

Scenarios (n = 100, p = 100, covariates iid Uniform(-2, 2)):

=====  ===============  =====================
id     signals          errors
=====  ===============  =====================
I      strong           Hyperbolic(0.5, 2)
II     strong           N(0, 2)
III    strong           t(2.1, 1)
IV     mixed            Hyperbolic(0.5, 2)
V      mixed            N(0, 2)
VI     mixed            t(2.1, 1)
=====  ===============  =====================

Strong: beta_0 = 2, beta_1 = beta_2 = beta_5 = beta_7 = beta_10 = 3.
Mixed: beta_0 = 2, beta_1 = 0.5, beta_2 = 1.5, beta_3 = 2, beta_4 = -3.
"""

import csv
import hashlib
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .distributions import hyperbolic_sample, sample_normal, student_t_sample

logger = logging.getLogger(__name__)

__all__ = [
    "SCENARIOS",
    "ScenarioSpec",
    "StandardizedData",
    "DataError",
    "generate_scenario",
    "standardize",
    "destandardize_coefficients",
    "add_noise_covariates",
    "transform_response",
    "inverse_transform_response",
    "dummy_encode",
    "train_test_split",
    "load_csv",
    "file_sha256",
]


class DataError(ValueError):
    """Malformed or unusable input data."""


_STRONG = {0: 2.0, 1: 3.0, 2: 3.0, 5: 3.0, 7: 3.0, 10: 3.0}
_MIXED = {0: 2.0, 1: 0.5, 2: 1.5, 3: 2.0, 4: -3.0}
_HYPERBOLIC = ("hyperbolic", 0.5, 2.0)
_NORMAL = ("normal", 0.0, 2.0)
_STUDENT_T = ("t", 2.1, 1.0)

SCENARIOS = {
    "I": (_STRONG, _HYPERBOLIC),
    "II": (_STRONG, _NORMAL),
    "III": (_STRONG, _STUDENT_T),
    "IV": (_MIXED, _HYPERBOLIC),
    "V": (_MIXED, _NORMAL),
    "VI": (_MIXED, _STUDENT_T),
}


@dataclass(frozen=True)
class ScenarioSpec:
    id: str
    n: int = 100
    p: int = 100

    def __post_init__(self):
        object.__setattr__(self, "id", str(self.id).upper())
        if self.id not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.id!r}; expected one of {list(SCENARIOS)}")
        signals, _ = SCENARIOS[self.id]
        if self.n < 1 or self.p < max(signals):
            raise ValueError(f"scenario {self.id} needs n >= 1 and p >= {max(signals)}")

    @property
    def beta_true(self):
        """Length p + 1, intercept first."""
        beta = np.zeros(self.p + 1)
        for j, v in SCENARIOS[self.id][0].items():
            beta[j] = v
        return beta

    @property
    def error_law(self):
        """``(family, first, second)``: hyperbolic (eta, rho2), normal (mean, var) or t (eta, rho2)."""
        return SCENARIOS[self.id][1]


def draw_errors(rng, error_law, size):
    family, first, second = error_law
    if family == "hyperbolic":
        return hyperbolic_sample(rng, first, second, size=size)
    if family == "normal":
        return sample_normal(rng, first, second, size=size)
    if family == "t":
        return student_t_sample(rng, first, second, size=size)
    raise ValueError(f"unknown error family {family!r}")


def generate_scenario(spec, rng, n=None):
    """Return ``(X_raw, y_raw, beta_true)``; ``n`` overrides ``spec.n`` (e.g. for test sets)."""
    n = spec.n if n is None else int(n)
    beta = spec.beta_true
    X = rng.uniform(-2.0, 2.0, size=(n, spec.p))
    eps = draw_errors(rng, spec.error_law, n)
    y = beta[0] + X @ beta[1:] + eps
    return X, y, beta


@dataclass(frozen=True)
class StandardizedData:
    """Centred and scaled design and response with the scaling used.

    Standard deviations use the ``n - 1`` denominator.
    """

    X: np.ndarray
    y: np.ndarray
    x_mean: np.ndarray
    x_sd: np.ndarray
    y_mean: float
    y_sd: float

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def transform_X(self, X_raw):
        """Scale new covariate rows with this (training) scaling."""
        X_raw = np.asarray(X_raw, dtype=float)
        if X_raw.shape[-1] != self.p:
            raise DataError(f"expected {self.p} covariates, got {X_raw.shape[-1]}")
        return (X_raw - self.x_mean) / self.x_sd

    def transform_y(self, y_raw):
        return (np.asarray(y_raw, dtype=float) - self.y_mean) / self.y_sd

    def inverse_y(self, y_std):
        return self.y_mean + self.y_sd * np.asarray(y_std, dtype=float)

    def destandardize(self):
        """Recover the raw design and response."""
        return self.X * self.x_sd + self.x_mean, self.inverse_y(self.y)

    def scaling_dict(self):
        return {
            "x_mean": self.x_mean.tolist(),
            "x_sd": self.x_sd.tolist(),
            "y_mean": float(self.y_mean),
            "y_sd": float(self.y_sd),
        }

    @classmethod
    def from_scaling(cls, scaling, X=None, y=None):
        x_mean = np.asarray(scaling["x_mean"], dtype=float)
        return cls(
            X=np.empty((0, x_mean.size)) if X is None else X,
            y=np.empty(0) if y is None else y,
            x_mean=x_mean,
            x_sd=np.asarray(scaling["x_sd"], dtype=float),
            y_mean=float(scaling["y_mean"]),
            y_sd=float(scaling["y_sd"]),
        )

    def to_csv(self, path, names=None):
        names = names or [f"x{j + 1}" for j in range(self.p)]
        frame = pd.DataFrame(self.X, columns=names)
        frame.insert(0, "y", self.y)
        frame.to_csv(path, index=False, float_format="%.17g")


def standardize(X_raw, y_raw, names=None):
    X_raw = np.asarray(X_raw, dtype=float)
    y_raw = np.asarray(y_raw, dtype=float)
    if X_raw.ndim != 2 or y_raw.shape != (X_raw.shape[0],):
        raise DataError(f"shape mismatch: X {X_raw.shape}, y {y_raw.shape}")
    if X_raw.shape[0] < 2:
        raise DataError("need at least two rows to standardize")
    x_mean = X_raw.mean(axis=0)
    x_sd = X_raw.std(axis=0, ddof=1)
    bad = np.flatnonzero(~(x_sd > 0))
    if bad.size:
        label = names[bad[0]] if names is not None else f"column {bad[0]}"
        raise DataError(f"{label} has zero variance")
    y_mean = float(y_raw.mean())
    y_sd = float(y_raw.std(ddof=1))
    if not y_sd > 0:
        raise DataError("response has zero variance")
    return StandardizedData(
        X=(X_raw - x_mean) / x_sd,
        y=(y_raw - y_mean) / y_sd,
        x_mean=x_mean,
        x_sd=x_sd,
        y_mean=y_mean,
        y_sd=y_sd,
    )


def destandardize_coefficients(beta_std, scaling):
    """Map standardized-scale coefficients back to raw units.

    Returns ``(beta_raw, intercept_raw)`` with ``beta_raw_j = beta_j sd_y / sd_xj``
    and ``intercept = mean_y - sum_j beta_raw_j mean_xj``.
    """
    beta_std = np.asarray(beta_std, dtype=float)
    if beta_std.shape != scaling.x_sd.shape:
        raise DataError(f"coefficients have length {beta_std.size}, scaling has {scaling.x_sd.size}")
    beta_raw = beta_std * scaling.y_sd / scaling.x_sd
    intercept = scaling.y_mean - float(beta_raw @ scaling.x_mean)
    return beta_raw, intercept


def add_noise_covariates(X_raw, k, rng):
    """Append ``k`` iid standard-normal columns."""
    X_raw = np.asarray(X_raw, dtype=float)
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        return X_raw.copy()
    return np.hstack([X_raw, rng.standard_normal((X_raw.shape[0], k))])


def _parse_kind(kind):
    """Accept ``"log"``, ``"sqrt"``, ``("scale", c)`` or a list of those."""
    if isinstance(kind, str) or (isinstance(kind, tuple) and kind and kind[0] == "scale"):
        return [kind]
    return list(kind)


def transform_response(y, kind):
    """Apply response transforms in order.

    ``kind`` is ``"log"``, ``"sqrt"``, ``("scale", c)`` or a sequence of them,
    e.g. ``[("scale", 1e-6), "sqrt"]`` for salaries.
    """
    out = np.array(y, dtype=float)
    for step in _parse_kind(kind):
        if step == "log":
            bad = np.flatnonzero(~(out > 0))
            if bad.size:
                raise DataError(f"log transform needs positive values; index {bad[0]} is {out[bad[0]]}")
            out = np.log(out)
        elif step == "sqrt":
            bad = np.flatnonzero(~(out >= 0))
            if bad.size:
                raise DataError(f"sqrt transform needs non-negative values; index {bad[0]} is {out[bad[0]]}")
            out = np.sqrt(out)
        elif isinstance(step, (tuple, list)) and step[0] == "scale":
            out = out * float(step[1])
        else:
            raise ValueError(f"unknown response transform {step!r}")
    return out


def inverse_transform_response(y, kind):
    """Undo :func:`transform_response`; negative values under ``sqrt`` map to 0."""
    out = np.array(y, dtype=float)
    for step in reversed(_parse_kind(kind)):
        if step == "log":
            out = np.exp(out)
        elif step == "sqrt":
            out = np.maximum(out, 0.0) ** 2
        elif isinstance(step, (tuple, list)) and step[0] == "scale":
            out = out / float(step[1])
        else:
            raise ValueError(f"unknown response transform {step!r}")
    return out


def dummy_encode(table, categorical_cols, min_count=6):
    """Indicator-code categorical columns, dropping rare categories.

    Rows with missing values are removed first. For each categorical column,
    categories seen fewer than ``min_count`` times are dropped together with
    their rows; of the remaining categories the first (sorted) is the
    reference level. A column left with fewer than two categories yields no
    indicators.

    Returns a new DataFrame with the categorical columns replaced.
    """
    frame = table.dropna(axis=0, how="any").copy()
    for col in categorical_cols:
        if col not in frame.columns:
            raise DataError(f"missing categorical column {col!r}")
        values = frame[col].astype(str)
        counts = values.value_counts()
        keep = sorted(counts[counts >= min_count].index)
        dropped = sorted(set(counts.index) - set(keep))
        if dropped:
            logger.info("%s: dropping rare categories %s", col, dropped)
        frame = frame[values.isin(keep)]
        values = values[values.isin(keep)]
        if len(keep) < 2:
            logger.warning("%s has %d usable categories; no indicators created", col, len(keep))
            frame = frame.drop(columns=[col])
            continue
        pos = list(frame.columns).index(col)
        frame = frame.drop(columns=[col])
        for offset, level in enumerate(keep[1:]):
            frame.insert(pos + offset, f"{col}_{level}", (values == level).astype(float).to_numpy())
    return frame.reset_index(drop=True)


def train_test_split(n_rows, rng, train_fraction=None, train_count=None):
    """Uniformly random partition of ``range(n_rows)``; returns sorted (train, test) indices."""
    if (train_fraction is None) == (train_count is None):
        raise ValueError("give exactly one of train_fraction and train_count")
    if train_count is None:
        if not 0.0 < train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        train_count = int(round(train_fraction * n_rows))
    if not 0 < train_count < n_rows:
        raise ValueError(f"cannot take {train_count} training rows out of {n_rows}")
    perm = rng.permutation(n_rows)
    return np.sort(perm[:train_count]), np.sort(perm[train_count:])


def load_csv(path, schema=None):
    """Read a comma-separated file with a header row.

    ``schema`` maps column name to ``"numeric"`` or ``"categorical"``; listed
    columns must exist and numeric ones must parse. ``NA`` and empty fields
    are missing. Unlisted columns are kept with pandas' inferred types.
    """
    try:
        frame = pd.read_csv(path, na_values=["NA", ""], keep_default_na=False, float_precision="round_trip")
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: {exc}") from None
    schema = schema or {}
    missing = [c for c in schema if c not in frame.columns]
    if missing:
        raise DataError(f"{path}: missing columns {missing}")
    for col, kind in schema.items():
        if kind == "numeric":
            frame[col] = _parse_numeric(frame[col], path)
        elif kind == "categorical":
            frame[col] = frame[col].astype("string")
        else:
            raise ValueError(f"unknown column kind {kind!r} for {col!r}")
    logger.info("%s: %d rows, %d columns", path, len(frame), frame.shape[1])
    return frame


def _parse_numeric(column, path):
    parsed = pd.to_numeric(column, errors="coerce")
    bad = parsed.isna() & column.notna()
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise DataError(f"{path}: column {column.name!r}, data row {row + 1}: cannot parse {column.iloc[row]!r}")
    return parsed.astype(float)


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_matrix_csv(path, X, y, y_name="y"):
    """Write ``y`` then ``x1..xp`` with round-trip float formatting."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([y_name] + [f"x{j + 1}" for j in range(X.shape[1])])
        for yi, row in zip(y, X):
            w.writerow([repr(float(yi))] + [repr(float(v)) for v in row])


def read_matrix_csv(path, y_name="y"):
    frame = load_csv(path)
    if y_name not in frame.columns:
        raise DataError(f"{path}: missing response column {y_name!r}")
    for col in frame.columns:
        frame[col] = _parse_numeric(frame[col], path)
    y = frame[y_name].to_numpy(dtype=float)
    X = frame.drop(columns=[y_name]).to_numpy(dtype=float)
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DataError(f"{path}: missing or non-numeric values")
    return X, y, [c for c in frame.columns if c != y_name]

