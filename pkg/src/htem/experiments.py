"""Replicate orchestration for simulated scenarios and real datasets.

Replicate ``i`` of a run with master seed ``s`` draws its data, chain and
predictive samples from the substreams ``(s, i, 0)``, ``(s, i, 1)`` and
``(s, i, 2)``. Results therefore do not depend on the order or process in
which replicates execute.
"""

import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from importlib import resources

import numpy as np

from .data import (
    DataError,
    ScenarioSpec,
    add_noise_covariates,
    destandardize_coefficients,
    dummy_encode,
    file_sha256,
    generate_scenario,
    inverse_transform_response,
    load_csv,
    standardize,
    train_test_split,
    transform_response,
)
from .inference import bf_threshold, predictive_intervals, select_variables, summarize
from .metrics import ReplicateMetrics, coverage_and_width, mead, rmse, rmse_subset, tpr_tnr
from .sampler import ChainConfig, Hyperparameters, run_chain
from .streams import make_stream, substream_seed

logger = logging.getLogger(__name__)

__all__ = [
    "REPORT_SCHEMA_VERSION",
    "ExperimentConfig",
    "DatasetSchema",
    "DATASETS",
    "load_manifest",
    "replicate_seeds",
    "run_scenario_replicate",
    "run_dataset_replicate",
    "prepare_dataset",
    "run_replicates",
    "aggregate",
    "build_report",
]

REPORT_SCHEMA_VERSION = 1
STREAM_DATA, STREAM_CHAIN, STREAM_PREDICT = 0, 1, 2


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines the output of a replicate run.

    ``out`` and ``jobs`` do not affect results and are left out of the
    config hash.
    """

    scenario: str | None = None
    data: str | None = None
    dataset: str | None = None
    error_mode: str = "htem"
    reps: int = 20
    iterations: int = 20000
    burn_in: int = 2000
    thin: int = 1
    seed: int = 2024
    bf_cut: float = 3.2
    lam: float | None = None
    level: float = 0.9
    n_train: int = 100
    n_test: int = 1000
    p: int = 100
    train_frac: float | None = None
    train_count: int | None = None
    omega_fixed: float | None = None
    out: str = "."
    jobs: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if (self.scenario is None) == (self.data is None):
            raise ValueError("give exactly one of scenario and data")
        if self.scenario is not None:
            ScenarioSpec(self.scenario, n=self.n_train, p=self.p)
        if self.dataset is not None and self.dataset not in DATASETS:
            raise ValueError(f"unknown dataset schema {self.dataset!r}; expected one of {sorted(DATASETS)}")
        Hyperparameters(error_mode=self.error_mode, omega_fixed=self.omega_fixed)
        ChainConfig(self.iterations, self.burn_in, self.thin)
        if self.reps < 1 or self.jobs < 1 or self.n_test < 1:
            raise ValueError("reps, jobs and n_test must be at least 1")
        if not self.bf_cut > 0:
            raise ValueError("bf_cut must be positive")
        if self.lam is not None and not 0.0 < self.lam < 1.0:
            raise ValueError("lambda must lie in (0, 1)")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must lie in (0, 1)")
        if self.train_frac is not None and self.train_count is not None:
            raise ValueError("give at most one of train_frac and train_count")

    @property
    def hyper(self):
        return Hyperparameters(error_mode=self.error_mode, omega_fixed=self.omega_fixed)

    def chain_config(self, seed):
        return ChainConfig(self.iterations, self.burn_in, self.thin, seed=seed)

    def threshold(self, p):
        """Explicit lambda, or the Bayes-factor cut under the Beta(1, sqrt(p)) prior."""
        if self.lam is not None:
            return self.lam
        hyper = self.hyper.resolve(p)
        return bf_threshold(self.bf_cut, hyper.s1, hyper.s2)

    def to_dict(self):
        return asdict(self)

    def config_hash(self):
        d = self.to_dict()
        d.pop("out")
        d.pop("jobs")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def replicate_seeds(master_seed, index):
    return {
        "data": substream_seed(master_seed, index, STREAM_DATA),
        "chain": substream_seed(master_seed, index, STREAM_CHAIN),
        "predict": substream_seed(master_seed, index, STREAM_PREDICT),
    }


# ---------------------------------------------------------------------------
# real datasets


@dataclass(frozen=True)
class DatasetSchema:
    """How to turn a user-supplied CSV into a regression problem.

    Columns not named as response, categorical or dropped are used as
    numeric covariates.
    """

    name: str
    response: str
    categorical: tuple = ()
    drop: tuple = ()
    transform: tuple = ()
    noise_covariates: int = 0
    train_fraction: float | None = None
    train_count: int | None = None
    min_count: int = 6
    expected_rows: int | None = None
    numeric: tuple = ()


DATASETS = {
    "boston": DatasetSchema(
        name="boston",
        response="medv",
        numeric=("crim", "zn", "indus", "chas", "nox", "rm", "age", "dis", "rad", "tax", "ptratio", "black", "lstat"),
        transform=("log",),
        noise_covariates=100,
        train_fraction=0.5,
        expected_rows=506,
    ),
    "nba": DatasetSchema(
        name="nba",
        response="Salary",
        categorical=("Team", "Position"),
        drop=("Unnamed: 0", "Player Name", "Player-additional"),
        transform=(("scale", 1e-6), "sqrt"),
        train_count=196,
        expected_rows=467,
    ),
}


def load_manifest():
    """Expected SHA-256 checksums of the user-supplied raw files (None when unpinned)."""
    with resources.files("htem").joinpath("datasets.json").open("r", encoding="utf-8") as fh:
        return json.load(fh)


def _check_checksum(path, schema):
    entry = load_manifest().get(schema.name, {})
    expected = entry.get("sha256")
    actual = file_sha256(path)
    if expected is None:
        logger.info("%s: no pinned checksum for %s (sha256 %s)", path, schema.name, actual)
    elif expected != actual:
        logger.warning("%s: sha256 %s differs from the manifest's %s", path, actual, expected)
    return actual


def prepare_dataset(path, schema):
    """Load, clean and encode a raw CSV. Returns ``(X_raw, y_transformed, names, sha256)``.

    Noise covariates and the split are per replicate and are not added here.
    """
    spec = {schema.response: "numeric"}
    spec.update({c: "numeric" for c in schema.numeric})
    spec.update({c: "categorical" for c in schema.categorical})
    frame = load_csv(path, spec)
    frame = frame.drop(columns=[c for c in schema.drop if c in frame.columns])
    if schema.numeric:
        frame = frame[[schema.response, *schema.numeric, *schema.categorical]]
    frame = dummy_encode(frame, schema.categorical, min_count=schema.min_count)
    covs = [c for c in frame.columns if c != schema.response]
    try:
        X = frame[covs].to_numpy(dtype=float)
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric covariate column ({exc})") from None
    y = frame[schema.response].to_numpy(dtype=float)
    if schema.transform:
        y = transform_response(y, list(schema.transform))
    return X, y, covs, _check_checksum(path, schema)


# ---------------------------------------------------------------------------
# one replicate


def _fit_and_score(cfg, X_tr, y_tr, X_te, y_te, seeds, transform=()):
    sd = standardize(X_tr, y_tr)
    trace = run_chain(sd.X, sd.y, cfg.hyper, cfg.chain_config(seeds["chain"]))
    summary = summarize(trace)
    lo, hi, med = predictive_intervals(trace, sd.transform_X(X_te), make_stream(seeds["predict"]), cfg.level)
    lo, hi, med = (sd.inverse_y(v) for v in (lo, hi, med))
    if transform:
        # monotone, so quantiles map through
        lo, hi, med = (inverse_transform_response(v, list(transform)) for v in (lo, hi, med))
        y_te = inverse_transform_response(y_te, list(transform))
    coverage, width = coverage_and_width(np.column_stack([lo, hi]), y_te)
    return sd, trace, summary, coverage, width, mead(med, y_te)


def _nan(v):
    return math.nan if v is None else float(v)


def run_scenario_replicate(cfg, index):
    """Simulate, fit, predict and score replicate ``index``; returns a record dict."""
    seeds = replicate_seeds(cfg.seed, index)
    spec = ScenarioSpec(cfg.scenario, n=cfg.n_train, p=cfg.p)
    rng = make_stream(seeds["data"])
    X_tr, y_tr, beta_true = generate_scenario(spec, rng)
    X_te, y_te, _ = generate_scenario(spec, rng, n=cfg.n_test)
    sd, trace, summary, coverage, width, md = _fit_and_score(cfg, X_tr, y_tr, X_te, y_te, seeds)

    slopes, intercept = destandardize_coefficients(summary.beta_median, sd)
    beta_hat = np.concatenate([[intercept], slopes])
    signal = beta_true != 0
    lam = cfg.threshold(cfg.p)
    gamma_hat = select_variables(summary.inclusion_prob, lam)
    tpr, tnr = tpr_tnr(gamma_hat, signal[1:])
    metrics = ReplicateMetrics(
        scenario=spec.id,
        replicate=index,
        mode=cfg.error_mode,
        seed=seeds["data"],
        rmse_all=rmse(beta_true, beta_hat),
        rmse_signal=_nan(rmse_subset(beta_true, beta_hat, signal)),
        rmse_noise=_nan(rmse_subset(beta_true, beta_hat, ~signal)),
        tpr=_nan(tpr),
        tnr=_nan(tnr),
        coverage=coverage,
        median_width=width,
        mead=md,
        p_hyperbolic=summary.p_hyperbolic,
        eta_mode=summary.eta_mode,
        mc3_acceptance=summary.mc3_acceptance,
    )
    return {"index": index, "seeds": seeds, "lambda": lam, "metrics": metrics, "summary": summary}


def run_dataset_replicate(cfg, index, prepared=None):
    """One random split of a real dataset; ``prepared`` caches :func:`prepare_dataset` output."""
    schema = DATASETS[cfg.dataset]
    if prepared is None:
        prepared = prepare_dataset(cfg.data, schema)
    X, y, _, _ = prepared
    seeds = replicate_seeds(cfg.seed, index)
    rng = make_stream(seeds["data"])
    X = add_noise_covariates(X, schema.noise_covariates, rng)
    frac = cfg.train_frac if cfg.train_frac is not None else schema.train_fraction
    count = cfg.train_count if cfg.train_count is not None else schema.train_count
    if cfg.train_frac is not None:
        count = None
    elif cfg.train_count is not None:
        frac = None
    tr, te = train_test_split(X.shape[0], rng, train_fraction=frac, train_count=count)
    sd, trace, summary, coverage, width, md = _fit_and_score(
        cfg, X[tr], y[tr], X[te], y[te], seeds, transform=schema.transform
    )
    metrics = ReplicateMetrics(
        scenario=schema.name,
        replicate=index,
        mode=cfg.error_mode,
        seed=seeds["data"],
        rmse_all=math.nan,
        rmse_signal=math.nan,
        rmse_noise=math.nan,
        tpr=math.nan,
        tnr=math.nan,
        coverage=coverage,
        median_width=width,
        mead=md,
        p_hyperbolic=summary.p_hyperbolic,
        eta_mode=summary.eta_mode,
        mc3_acceptance=summary.mc3_acceptance,
    )
    return {"index": index, "seeds": seeds, "lambda": None, "metrics": metrics, "summary": summary}


def _worker(args):
    cfg, index, prepared = args
    try:
        if cfg.scenario is not None:
            return run_scenario_replicate(cfg, index)
        return run_dataset_replicate(cfg, index, prepared)
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        return {"index": index, "seeds": replicate_seeds(cfg.seed, index), "error": f"{type(exc).__name__}: {exc}"}


def run_replicates(cfg, indices=None, progress=None):
    """Run replicates (in parallel when ``cfg.jobs > 1``); results come back in index order.

    A failing replicate yields a record with an ``error`` entry instead of
    metrics; the others are unaffected.
    """
    indices = list(range(cfg.reps)) if indices is None else list(indices)
    prepared = None
    if cfg.data is not None:
        prepared = prepare_dataset(cfg.data, DATASETS[cfg.dataset])
    tasks = [(cfg, i, prepared) for i in indices]
    if cfg.jobs == 1 or len(tasks) == 1:
        results = []
        for t in tasks:
            results.append(_worker(t))
            if progress is not None:
                progress(t[1])
        return results
    with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
        results = list(pool.map(_worker, tasks))
    return sorted(results, key=lambda r: r["index"])


_MEAN_FIELDS = (
    "rmse_all", "rmse_signal", "rmse_noise", "tpr", "tnr", "coverage",
    "median_width", "mead", "p_hyperbolic", "mc3_acceptance",
)


def aggregate(results):
    """Means over successful replicates; NaN entries (undefined rates) are skipped."""
    ok = [r["metrics"] for r in results if "metrics" in r]
    means = {}
    for name in _MEAN_FIELDS:
        vals = np.array([getattr(m, name) for m in ok], dtype=float)
        vals = vals[~np.isnan(vals)]
        means[name] = float(vals.mean()) if vals.size else None
    return {"n_ok": len(ok), "n_failed": len(results) - len(ok), "mean": means}


def build_report(cfg, results, started=None, finished=None):
    """JSON-ready report. Everything except ``timestamps`` is a function of the config."""
    agg = aggregate(results)
    rows = []
    for r in results:
        row = {"index": r["index"], "seeds": r["seeds"]}
        if "error" in r:
            row["error"] = r["error"]
        else:
            row["metrics"] = r["metrics"].to_dict()
            row["summary"] = r["summary"].to_dict()
            row["lambda"] = r["lambda"]
        rows.append(row)
    m = agg["mean"]
    tables = {
        "coverage": m["coverage"],
        "rmse": m["rmse_all"],
        "tpr": m["tpr"],
        "tnr": m["tnr"],
        "p_hyperbolic": m["p_hyperbolic"],
    }
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "master_seed": cfg.seed,
        "config_hash": cfg.config_hash(),
        "config": {k: v for k, v in cfg.to_dict().items() if k not in ("out", "jobs")},
        "n_ok": agg["n_ok"],
        "n_failed": agg["n_failed"],
        "mean": m,
        "tables": {cfg.error_mode: tables},
        "replicates": rows,
        "timestamps": {
            "started": started,
            "finished": finished if finished is not None else time.strftime("%Y-%m-%dT%H:%M:%S"),
        },
    }


def with_overrides(cfg, **kwargs):
    return replace(cfg, **{k: v for k, v in kwargs.items() if v is not None})
