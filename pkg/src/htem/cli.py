"""Command-line entry point: ``htem {simulate,fit,predict,evaluate,replicate}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
The default output directory is ``$HTEM_OUT`` or the current directory.
"""

import argparse
import json
import logging
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .data import (
    DataError,
    ScenarioSpec,
    StandardizedData,
    destandardize_coefficients,
    generate_scenario,
    inverse_transform_response,
    load_csv,
    read_matrix_csv,
    standardize,
    transform_response,
    write_matrix_csv,
)
from .experiments import (
    DATASETS,
    REPORT_SCHEMA_VERSION,
    ExperimentConfig,
    build_report,
    replicate_seeds,
    run_replicates,
)
from .inference import PosteriorSummary, bf_threshold, predictive_intervals, select_variables, summarize
from .linalg import NotPositiveDefiniteError
from .metrics import ReplicateMetrics, append_metrics_csv, coverage_and_width, mead, rmse, rmse_subset, tpr_tnr
from .sampler import ChainConfig, ChainTrace, Hyperparameters, InvariantError, run_chain
from .streams import make_stream

logger = logging.getLogger("htem")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULTS = {"iters": 20000, "burnin": 2000, "thin": 1, "reps": 20, "seed": 2024, "level": 0.9, "bf_cut": 3.2}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_out():
    return os.environ.get("HTEM_OUT", ".")


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: {exc}") from None


def parse_transform(text):
    """``"scale:1e-6,sqrt"`` -> ``[("scale", 1e-6), "sqrt"]``."""
    if not text:
        return []
    steps = []
    for part in text.split(","):
        part = part.strip()
        if part in ("log", "sqrt"):
            steps.append(part)
        elif part.startswith("scale:"):
            steps.append(("scale", float(part.split(":", 1)[1])))
        else:
            raise UsageError(f"unknown transform step {part!r}")
    return steps


def _transform_to_json(steps):
    return [list(s) if isinstance(s, tuple) else s for s in steps]


def _transform_from_json(steps):
    return [tuple(s) if isinstance(s, list) else s for s in steps]


# ---------------------------------------------------------------------------
# verbs


def cmd_simulate(args):
    spec = ScenarioSpec(args.scenario, n=args.n, p=args.p)
    os.makedirs(args.out, exist_ok=True)
    written = []
    for i in range(args.reps):
        seeds = replicate_seeds(args.seed, i)
        rng = make_stream(seeds["data"])
        X, y, beta = generate_scenario(spec, rng)
        X_te, y_te, _ = generate_scenario(spec, rng, n=args.n_test)
        stem = os.path.join(args.out, f"scenario_{spec.id}_rep{i:03d}")
        write_matrix_csv(stem + "_train.csv", X, y)
        write_matrix_csv(stem + "_test.csv", X_te, y_te)
        _write_json(stem + "_truth.json", {
            "schema_version": REPORT_SCHEMA_VERSION,
            "scenario": spec.id,
            "replicate": i,
            "master_seed": args.seed,
            "seed": seeds["data"],
            "beta_true": beta.tolist(),
            "error_law": list(spec.error_law),
        })
        written.append(stem)
    print(json.dumps({"scenario": spec.id, "files": written}))
    return EXIT_OK


def cmd_fit(args):
    X, y, names = read_matrix_csv(args.data)
    steps = parse_transform(args.transform)
    if steps:
        y = transform_response(y, steps)
    sd = standardize(X, y, names)
    hyper = Hyperparameters(error_mode=args.mode)
    config = ChainConfig(args.iters, args.burnin, args.thin, seed=args.seed)
    trace = run_chain(sd.X, sd.y, hyper, config)
    summary = summarize(trace)
    os.makedirs(args.out, exist_ok=True)
    trace.to_npz(os.path.join(args.out, "trace.npz"))
    if args.csv_trace:
        trace.to_csv(os.path.join(args.out, "trace.csv"))
    out = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "data": os.path.abspath(args.data),
        "covariates": names,
        "mode": args.mode,
        "chain": {"iterations": args.iters, "burn_in": args.burnin, "thin": args.thin, "seed": args.seed},
        "hyper": hyper.resolve(sd.p).to_dict(),
        "scaling": sd.scaling_dict(),
        "transform": _transform_to_json(steps),
        "summary": summary.to_dict(),
    }
    _write_json(os.path.join(args.out, "summary.json"), out)
    print(json.dumps({"out": args.out, "p_hyperbolic": summary.p_hyperbolic, "mc3_acceptance": summary.mc3_acceptance}))
    return EXIT_OK


def _load_fit(fit_dir):
    meta = _read_json(os.path.join(fit_dir, "summary.json"))
    for key in ("schema_version", "scaling", "summary", "transform"):
        if key not in meta:
            raise DataError(f"{fit_dir}/summary.json: missing field {key!r}")
    trace_path = os.path.join(fit_dir, "trace.npz")
    try:
        trace = ChainTrace.from_npz(trace_path)
    except (OSError, KeyError, ValueError) as exc:
        raise DataError(f"{trace_path}: {exc}") from None
    return meta, trace


def cmd_predict(args):
    meta, trace = _load_fit(args.fit)
    X, y, _ = read_matrix_csv(args.data)
    sd = StandardizedData.from_scaling(meta["scaling"])
    if X.shape[1] != sd.p:
        raise DataError(f"{args.data}: {X.shape[1]} covariates, fit used {sd.p}")
    lo, hi, med = predictive_intervals(trace, sd.transform_X(X), make_stream(args.seed), args.level)
    lo, hi, med = (sd.inverse_y(v) for v in (lo, hi, med))
    steps = _transform_from_json(meta["transform"])
    if steps:
        lo, hi, med = (inverse_transform_response(v, steps) for v in (lo, hi, med))
    os.makedirs(os.path.dirname(os.path.abspath(args.out_file)), exist_ok=True)
    with open(args.out_file, "w", encoding="utf-8") as fh:
        fh.write("row,y,prediction,lower,upper\n")
        for i in range(X.shape[0]):
            vals = (float(v) for v in (y[i], med[i], lo[i], hi[i]))
            fh.write(f"{i}," + ",".join(repr(v) for v in vals) + "\n")
    cov, width = coverage_and_width(np.column_stack([lo, hi]), y)
    print(json.dumps({"out": args.out_file, "level": args.level, "coverage": cov, "median_width": width}))
    return EXIT_OK


def _read_predictions(path):
    frame = load_csv(path, {c: "numeric" for c in ("y", "prediction", "lower", "upper")})
    return (frame[c].to_numpy(float) for c in ("y", "prediction", "lower", "upper"))


def cmd_evaluate(args):
    meta, _ = _load_fit(args.fit)
    summary = PosteriorSummary.from_dict(meta["summary"])
    p = summary.beta_median.size
    lam = args.lam if args.lam is not None else bf_threshold(args.bf_cut, 1.0, math.sqrt(p))
    y, pred, lo, hi = _read_predictions(args.predictions)
    cov, width = coverage_and_width(np.column_stack([lo, hi]), y)
    nan = math.nan
    r_all = r_sig = r_noise = tpr = tnr = nan
    scenario, rep, seed = "data", 0, 0
    if args.truth:
        truth = _read_json(args.truth)
        beta_true = np.asarray(truth["beta_true"], float)
        if beta_true.size != p + 1:
            raise DataError(f"{args.truth}: beta_true has {beta_true.size} entries, expected {p + 1}")
        slopes, intercept = destandardize_coefficients(summary.beta_median, StandardizedData.from_scaling(meta["scaling"]))
        beta_hat = np.concatenate([[intercept], slopes])
        signal = beta_true != 0
        r_all = rmse(beta_true, beta_hat)
        r_sig = rmse_subset(beta_true, beta_hat, signal)
        r_noise = rmse_subset(beta_true, beta_hat, ~signal)
        t_pos, t_neg = tpr_tnr(select_variables(summary.inclusion_prob, lam), signal[1:])
        r_sig, r_noise, tpr, tnr = (nan if v is None else v for v in (r_sig, r_noise, t_pos, t_neg))
        scenario, rep, seed = truth.get("scenario", "data"), int(truth.get("replicate", 0)), int(truth.get("seed", 0))
    row = ReplicateMetrics(
        scenario=scenario, replicate=rep, mode=meta.get("mode", "htem"), seed=seed,
        rmse_all=r_all, rmse_signal=r_sig, rmse_noise=r_noise, tpr=tpr, tnr=tnr,
        coverage=cov, median_width=width, mead=mead(pred, y),
        p_hyperbolic=summary.p_hyperbolic, eta_mode=summary.eta_mode, mc3_acceptance=summary.mc3_acceptance,
    )
    if not 0.0 <= row.coverage <= 1.0:
        raise ArithmeticError("coverage outside [0, 1]")
    os.makedirs(os.path.dirname(os.path.abspath(args.out_file)), exist_ok=True)
    append_metrics_csv(args.out_file, [row])
    print(json.dumps({"lambda": lam, **row.to_dict()}))
    return EXIT_OK


def cmd_replicate(args):
    if (args.scenario is None) == (args.data is None):
        raise UsageError("give exactly one of --scenario and --data")
    if args.data is not None and args.dataset is None:
        raise UsageError("--data needs --dataset (one of %s)" % ", ".join(sorted(DATASETS)))
    try:
        cfg = ExperimentConfig(
            scenario=args.scenario, data=args.data, dataset=args.dataset, error_mode=args.mode,
            reps=args.reps, iterations=args.iters, burn_in=args.burnin, thin=args.thin, seed=args.seed,
            bf_cut=args.bf_cut, lam=args.lam, level=args.level, n_test=args.n_test,
            train_frac=args.train_frac, train_count=args.train_count, out=args.out, jobs=args.jobs,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    os.makedirs(cfg.out, exist_ok=True)
    started = time.strftime("%Y-%m-%dT%H:%M:%S")
    results = run_replicates(cfg, progress=lambda i: logger.info("replicate %d done", i))
    report = build_report(cfg, results, started=started)
    label = (cfg.scenario or cfg.dataset).lower()
    stem = os.path.join(cfg.out, f"{label}_{cfg.error_mode}")
    rows = [r["metrics"] for r in results if "metrics" in r]
    csv_path = stem + "_replicates.csv"
    if os.path.exists(csv_path):
        os.remove(csv_path)
    append_metrics_csv(csv_path, rows)
    _write_json(stem + "_report.json", _json_safe(report))
    print(json.dumps({"report": stem + "_report.json", "n_ok": report["n_ok"], "n_failed": report["n_failed"], "mean": report["mean"]}))
    if report["n_ok"] == 0:
        return EXIT_NUMERIC
    return EXIT_OK


def _json_safe(obj):
    if isinstance(obj, float):
        return None if not math.isfinite(obj) else obj
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# parser


def _add_chain_flags(sp):
    sp.add_argument("--mode", choices=("htem", "hem", "tem"), default="htem", help="error model")
    sp.add_argument("--iters", type=int, default=DEFAULTS["iters"], help="total sweeps including burn-in")
    sp.add_argument("--burnin", type=int, default=DEFAULTS["burnin"])
    sp.add_argument("--thin", type=int, default=DEFAULTS["thin"])
    sp.add_argument("--seed", type=int, default=DEFAULTS["seed"], help="master seed")


def build_parser():
    parser = _Parser(prog="htem", description="Robust spike-and-slab regression with hyperbolic/Student-t errors.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    sp = sub.add_parser("simulate", help="write simulated train/test datasets")
    sp.add_argument("--scenario", required=True, help="I..VI")
    sp.add_argument("--reps", type=int, default=DEFAULTS["reps"])
    sp.add_argument("--seed", type=int, default=DEFAULTS["seed"])
    sp.add_argument("--n", type=int, default=100)
    sp.add_argument("--p", type=int, default=100)
    sp.add_argument("--n-test", type=int, default=1000)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("fit", help="run the sampler on a CSV (column y plus covariates)")
    sp.add_argument("--data", required=True)
    _add_chain_flags(sp)
    sp.add_argument("--transform", default="", help="response transform, e.g. 'scale:1e-6,sqrt' or 'log'")
    sp.add_argument("--csv-trace", action="store_true", help="also dump the trace as CSV")
    sp.add_argument("--out", default=None, help="output directory")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("predict", help="posterior predictive intervals for a test CSV")
    sp.add_argument("--fit", required=True, help="directory written by 'fit'")
    sp.add_argument("--data", required=True)
    sp.add_argument("--level", type=float, default=DEFAULTS["level"])
    sp.add_argument("--seed", type=int, default=DEFAULTS["seed"])
    sp.add_argument("--out", default=None, help="predictions CSV (default <fit>/predictions.csv)")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("evaluate", help="score predictions and coefficients; appends a metrics row")
    sp.add_argument("--fit", required=True)
    sp.add_argument("--predictions", required=True)
    sp.add_argument("--truth", default=None, help="truth JSON written by 'simulate'")
    sp.add_argument("--bf-cut", type=float, default=DEFAULTS["bf_cut"])
    sp.add_argument("--lambda", dest="lam", type=float, default=None)
    sp.add_argument("--out", default=None, help="metrics CSV (default <fit>/metrics.csv)")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("replicate", help="simulate/fit/predict/evaluate over many replicates")
    sp.add_argument("--scenario", default=None)
    sp.add_argument("--data", default=None, help="raw dataset CSV")
    sp.add_argument("--dataset", choices=sorted(DATASETS), default=None, help="schema for --data")
    _add_chain_flags(sp)
    sp.add_argument("--reps", type=int, default=DEFAULTS["reps"])
    sp.add_argument("--bf-cut", type=float, default=DEFAULTS["bf_cut"])
    sp.add_argument("--lambda", dest="lam", type=float, default=None)
    sp.add_argument("--level", type=float, default=DEFAULTS["level"])
    sp.add_argument("--n-test", type=int, default=1000)
    split = sp.add_mutually_exclusive_group()
    split.add_argument("--train-frac", type=float, default=None)
    split.add_argument("--train-count", type=int, default=None)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_replicate)
    return parser


def _resolve_out(args):
    out = args.out
    if args.verb in ("simulate", "fit", "replicate"):
        args.out = out or _default_out()
    elif args.verb == "predict":
        args.out_file = out or os.path.join(args.fit, "predictions.csv")
    elif args.verb == "evaluate":
        args.out_file = out or os.path.join(args.fit, "metrics.csv")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    _resolve_out(args)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"htem: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NotPositiveDefiniteError, InvariantError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"htem: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, OSError) as exc:
        print(f"htem: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"htem: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
