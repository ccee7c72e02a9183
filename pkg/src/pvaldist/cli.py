"""Command-line interface: ``pvaldist {predict,simulate,correct,compare}``.

Exit codes: 0 success, 2 configuration error, 3 domain error, 4 internal
error.  CSV numbers are written with 17 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import metrics
from .cumulants import FamilySpec, TestStatCalibration, calibrate, cgf
from .edgeworth import Sidedness, pvalue_curve
from .errors import ConfigError, DomainError, NoSaddlepointError
from .harness import ExperimentConfig, run_experiment, scenario_calibrations
from .saddlepoint import corrected_pvalue, exact_pvalue, normal_pvalue

CONFIG_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_INTERNAL = 0, 2, 3, 4
TOP_KEYS = {"version", "description", "experiment", "prediction", "sweep"}
EXPERIMENT_KEYS = {"scenario", "n", "reps", "seed", "methods", "sided", "workers", "params", "alphas", "hist_bins"}
PREDICTION_KEYS = {"family", "n", "a_n", "b_n", "calibration", "sided"}
CALIBRATION_KEYS = {"mu_n", "v_n", "rho3", "rho4", "n"}
CORRECT_METHODS = {"saddlepoint": "lugannani_rice", "saddlepoint_rstar": "rstar_form"}


def fmt(x):
    if isinstance(x, str):
        return x
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "NA"
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


# ------------------------------------------------------------ config

def load_config(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno} "
                          f"(byte offset {exc.pos}): {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    _check_keys(doc, TOP_KEYS, "", required={"version"})
    if doc["version"] != CONFIG_VERSION:
        raise ConfigError(f"field 'version': expected {CONFIG_VERSION}, got {doc['version']!r}")
    if "experiment" in doc:
        _check_keys(doc["experiment"], EXPERIMENT_KEYS, "experiment.", required={"scenario", "n", "reps"})
    if "prediction" in doc:
        _check_keys(doc["prediction"], PREDICTION_KEYS, "prediction.")
    if "sweep" in doc and not (isinstance(doc["sweep"], list) and all(isinstance(s, dict) for s in doc["sweep"])):
        raise ConfigError("field 'sweep': expected a list of parameter objects")
    return doc


def _check_keys(obj, allowed, prefix, required=()):
    if not isinstance(obj, dict):
        raise ConfigError(f"field '{prefix.rstrip('.') or '<root>'}': expected an object")
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise ConfigError(f"unknown field '{prefix}{extra[0]}' (allowed: {sorted(allowed)})")
    missing = sorted(set(required) - set(obj))
    if missing:
        raise ConfigError(f"missing required field '{prefix}{missing[0]}'")


def experiment_config(doc, seed=None, threads=None, params_override=None, reps=None) -> ExperimentConfig:
    if "experiment" not in doc:
        raise ConfigError("missing required field 'experiment'")
    e = dict(doc["experiment"])
    if params_override:
        e["params"] = {**e.get("params", {}), **params_override}
    if seed is not None:
        e["seed"] = seed
    if threads is not None:
        e["workers"] = threads
    if reps is not None:
        e["reps"] = reps
    try:
        return ExperimentConfig(**e)
    except DomainError as exc:
        raise ConfigError(f"field 'experiment': {exc}") from None


def prediction_calibration(doc):
    """(calibration, sidedness) for ``predict``."""
    if "prediction" in doc:
        pr = doc["prediction"]
        sided = pr.get("sided", "two_sided")
        if "calibration" in pr:
            _check_keys(pr["calibration"], CALIBRATION_KEYS, "prediction.calibration.", required={"mu_n", "v_n"})
            return TestStatCalibration.from_moments(**pr["calibration"]), sided
        for k in ("family", "n", "a_n", "b_n"):
            if k not in pr:
                raise ConfigError(f"missing required field 'prediction.{k}'")
        try:
            fam = FamilySpec.from_dict(pr["family"])
        except (DomainError, TypeError) as exc:
            raise ConfigError(f"field 'prediction.family': {exc}") from None
        return calibrate(fam, int(pr["n"]), float(pr["a_n"]), float(pr["b_n"])), sided
    cfg = experiment_config(doc)
    cals = scenario_calibrations(cfg)
    if "edgeworth" not in cals:
        raise ConfigError(f"scenario {cfg.scenario!r} has no closed-form prediction; add a 'prediction' block")
    return cals["edgeworth"], cfg.sided


def parse_grid(spec):
    try:
        a, b, step = (float(v) for v in spec.split(":"))
    except ValueError:
        raise ConfigError(f"grid must be 'start:stop:step', got {spec!r}") from None
    if step <= 0 or b < a:
        raise ConfigError(f"grid {spec!r} is empty")
    k = int(math.floor((b - a) / step + 1e-9))
    return np.round(a + step * np.arange(k + 1), 12)


# ------------------------------------------------------------ output

def _open_out(path):
    return sys.stdout if path in (None, "-") else open(path, "w", newline="")


def write_csv(path, header, rows):
    body = [[fmt(v) for v in r] for r in rows]
    fh = _open_out(path)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(body)
    finally:
        if fh is not sys.stdout:
            fh.close()


def read_csv(path):
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = list(reader)
            header = [h.strip() for h in (reader.fieldnames or [])]
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return header, rows


# ------------------------------------------------------------ commands

def cmd_predict(args):
    doc = load_config(args.config)
    cal, sided = prediction_calibration(doc)
    grid = parse_grid(args.grid)
    curve = pvalue_curve(cal, grid, sided)
    cdf = curve.clamped() if args.clamp else curve.cdf
    pdf = curve.pdf if curve.pdf is not None else [None] * grid.size
    flags = curve.out_of_range
    write_csv(args.out, ["t", "cdf", "pdf", "flag_out_of_range"],
              zip(grid, cdf, pdf, flags))
    return EXIT_OK


def _write_experiment(res, prefix):
    summary = res.summary()
    with open(f"{prefix}.summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, default=float)
    methods = list(res.hist_counts)
    edges = res.hist_edges
    write_csv(f"{prefix}.hist.csv", ["bin_lo", "bin_hi"] + [f"count_{m}" for m in methods],
              ([edges[i], edges[i + 1]] + [res.hist_counts[m][i] for m in methods] for i in range(edges.size - 1)))
    emeth = list(res.ecdf)
    theo = list(res.theory)
    write_csv(f"{prefix}.ecdf.csv", ["t"] + [f"ecdf_{m}" for m in emeth] + [f"theory_{k}" for k in theo],
              ([t] + [res.ecdf[m][i] for m in emeth] + [res.theory[k][i] for k in theo]
               for i, t in enumerate(res.grid)))
    return summary


def cmd_simulate(args):
    doc = load_config(args.config)
    prefix = args.out or "pvaldist_run"
    sweep = doc.get("sweep") or [None]
    for i, override in enumerate(sweep):
        cfg = experiment_config(doc, args.seed, args.threads, override, args.reps)
        res = run_experiment(cfg)
        tag = prefix if len(sweep) == 1 else f"{prefix}.{i}"
        summary = _write_experiment(res, tag)
        for m, s in summary["methods"].items():
            t1 = s.get("type1_error", {}).get(repr(0.05), {})
            shape = s.get("shape", {}).get("label", "-")
            print(f"{tag}: {m:12s} reject@0.05={t1.get('rate', float('nan')):.4f} "
                  f"(se {t1.get('se', float('nan')):.4f}) ks_uniform={s.get('ks_uniform', float('nan')):.4f} "
                  f"shape={shape} excluded={s['excluded']}")
    return EXIT_OK


def _family_from_args(args):
    if args.family is None:
        raise ConfigError("--family is required")
    try:
        spec = json.loads(args.family)
    except json.JSONDecodeError:
        try:
            with open(args.family) as fh:
                spec = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"--family: not a JSON object or readable JSON file ({exc})") from None
    try:
        return FamilySpec.from_dict(spec)
    except (DomainError, TypeError, AttributeError) as exc:
        raise ConfigError(f"--family: {exc}") from None


def cmd_correct(args):
    if args.method not in CORRECT_METHODS:
        raise ConfigError(f"unknown method {args.method!r}; choose from {sorted(CORRECT_METHODS)}")
    fam = _family_from_args(args)
    n = args.n
    if n is None or n < 1:
        raise ConfigError("--n must be a positive integer")
    sided = Sidedness.coerce(args.sided)
    upper = args.tail == "upper"
    header, rows = read_csv(args.input)
    if rows and "id" not in header:
        raise ConfigError(f"{args.input}: missing 'id' column")
    if rows and not ({"statistic", "observed_mean"} & set(header)):
        raise ConfigError(f"{args.input}: need a 'statistic' or 'observed_mean' column")
    mean, sd = cgf(fam, 0.0, 1), math.sqrt(cgf(fam, 0.0, 2))
    form = CORRECT_METHODS[args.method]
    out, warnings = [], 0
    for row in rows:
        try:
            m = float(row["observed_mean"]) if "observed_mean" in row and row["observed_mean"] not in ("", None) \
                else mean + float(row["statistic"]) * sd / math.sqrt(n)
        except ValueError:
            raise DomainError(f"row id={row.get('id')!r}: value is not a number") from None
        p_norm = normal_pvalue(fam, n, m, sided, upper)
        try:
            p_corr = corrected_pvalue(fam, n, m, sided, upper, form)
        except NoSaddlepointError:
            p_corr, warnings = float("nan"), warnings + 1
        out.append([row["id"], exact_pvalue(fam, n, m, sided, upper), p_norm, p_corr])
    order = sorted(range(len(out)), key=lambda i: (math.isnan(out[i][3]), out[i][3]))
    rank = {i: k + 1 for k, i in enumerate(order)}
    has_exact = any(r[1] is not None for r in out) or (not out and fam.kind in ("gamma", "normal"))
    header = ["id", "rank"] + (["p_exact"] if has_exact else []) + ["p_normal", f"p_{args.method}"]
    write_csv(args.out, header,
              ([r[0], rank[i]] + ([r[1]] if has_exact else []) + r[2:] for i, r in enumerate(out)))
    if warnings:
        print(f"warning: {warnings} row(s) without a saddlepoint written as NA", file=sys.stderr)
    return EXIT_OK


def _cdf_column(header, rows, path, prefer):
    if prefer:
        if prefer not in header:
            raise ConfigError(f"{path}: no column {prefer!r}")
        return prefer
    for c in header:
        if c == "cdf" or c.startswith("ecdf"):
            return c
    raise ConfigError(f"{path}: no 'cdf' or 'ecdf_*' column")


def cmd_compare(args):
    he, re_ = read_csv(args.empirical)
    ht, rt = read_csv(args.theory)
    ce = _cdf_column(he, re_, args.empirical, args.empirical_column)
    ct = _cdf_column(ht, rt, args.theory, args.theory_column)
    try:
        ge = np.array([float(r["t"]) for r in re_])
        gt = np.array([float(r["t"]) for r in rt])
        fe = np.array([float(r[ce]) for r in re_])
        ft = np.array([float(r[ct]) for r in rt])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read grid/cdf columns: {exc}") from None
    if ge.shape != gt.shape or not np.allclose(ge, gt, rtol=0, atol=1e-12):
        raise DomainError(f"grid mismatch: {ge.size} vs {gt.size} points")
    ks = metrics.ks_distance(fe, ft)
    i = int(np.argmax(np.abs(fe - ft)))
    lab = metrics.classify_shape_cdf(ge, fe, args.n_samples)
    print(f"ks={ks:.17g}")
    print(f"max_deviation_at_t={ge[i]:.17g} empirical={fe[i]:.17g} theory={ft[i]:.17g}")
    print(f"shape={lab.label.value} low_density={lab.low:.6g} high_density={lab.high:.6g}")
    return EXIT_OK


# ------------------------------------------------------------ parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="unsigned 64-bit seed")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker processes")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output path or prefix ('-' for stdout)")
    p = argparse.ArgumentParser(prog="pvaldist", parents=[common],
                                description="Edgeworth predictions and corrections of p-value distributions")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("predict", parents=[common], help="theoretical p-value CDF/PDF on a grid")
    sp.add_argument("config")
    sp.add_argument("--grid", default="0.0005:0.9995:0.001", help="start:stop:step (default %(default)s)")
    sp.add_argument("--clamp", action="store_true", help="clip CDF values to [0, 1]")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("simulate", parents=[common], help="run a Monte Carlo experiment")
    sp.add_argument("config")
    sp.add_argument("--reps", type=int, default=None, help="override the replication count")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("correct", parents=[common], help="saddlepoint-corrected p-values for a CSV of statistics")
    sp.add_argument("input")
    sp.add_argument("--method", default="saddlepoint", help=f"one of {sorted(CORRECT_METHODS)}")
    sp.add_argument("--family", help="family JSON object or path to a JSON file")
    sp.add_argument("--n", type=int, help="sample size behind each mean")
    sp.add_argument("--sided", default="two_sided", choices=[s.value for s in Sidedness])
    sp.add_argument("--tail", default="lower", choices=["lower", "upper"], help="tail for one-sided p-values")
    sp.set_defaults(func=cmd_correct)

    sp = sub.add_parser("compare", parents=[common], help="KS distance between two tabulated CDFs")
    sp.add_argument("empirical")
    sp.add_argument("theory")
    sp.add_argument("--empirical-column", default=None)
    sp.add_argument("--theory-column", default=None)
    sp.add_argument("--n-samples", type=int, default=100000, help="sample size for shape standard errors")
    sp.set_defaults(func=cmd_compare)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    for k in ("seed", "threads", "out"):
        if not hasattr(args, k):
            setattr(args, k, None)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except Exception as exc:  # pragma: no cover - last resort
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
