"""Seeded Monte Carlo experiments on p-value distributions.

Every replication ``i`` draws from its own Philox stream keyed by the seed
with counter ``(0, 0, 0, i)``, so results do not depend on how replications
are split across worker processes.  A covariate design shared by all
replications comes from the stream with counter ``(0, 0, 1, 0)``.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

from . import metrics
from .cumulants import FamilySpec, calibrate, cgf
from .edgeworth import Sidedness, pvalue_cdf
from .errors import ConfigError
from .models import (DataSet, GammaKnownShape, LogisticRegression, WeibullRegression, fit_constrained,
                     fit_mle, linkage_tests, score_test_glm, wald_test)
from .rstar import rstar_pvalue
from .saddlepoint import corrected_pvalue, normal_pvalue
from .specialfn import normal_cdf, normal_sf

__all__ = ["ExperimentConfig", "ExperimentResult", "run_experiment", "replication_rng", "STANDARD_GRID",
           "SCENARIOS", "theory_curves", "scenario_calibrations"]

STANDARD_GRID = np.round(np.arange(0.005, 0.995 + 1e-9, 0.001), 12)

SCENARIOS = {
    "gamma_clt": {
        "params": {"shape": 0.01, "rate": 0.01, "null_shape": None, "null_rate": None},
        "methods": ("normal", "saddlepoint", "rstar", "lr", "wald"),
        "default": ("normal",),
    },
    "linkage": {
        "params": {"probs": [0.25, 0.5, 0.25]},
        "methods": ("score", "wald"),
        "default": ("score", "wald"),
    },
    "logistic_gwas": {
        "params": {"maf": 0.025, "beta": [-3.5, 0.0, 0.02, 0.02], "test_index": 1, "psi0": 0.0,
                   "fixed_design": True},
        "methods": ("wald", "score", "lr", "rstar"),
        "default": ("wald", "rstar"),
    },
    "weibull_many_nuisance": {
        "params": {"k": 50, "shape": 1.0, "scale": 2.0, "test_index": 1, "psi0": 0.0, "fixed_design": False},
        "methods": ("wald", "lr", "rstar"),
        "default": ("wald", "rstar"),
    },
}


@dataclass
class ExperimentConfig:
    scenario: str
    n: int
    reps: int
    seed: int = 0
    methods: tuple = ()
    sided: str = "two_sided"
    workers: int = 1
    params: dict = field(default_factory=dict)
    alphas: tuple = (1e-4, 1e-3, 0.01, 0.05)
    hist_bins: int = 50

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {sorted(SCENARIOS)}")
        spec = SCENARIOS[self.scenario]
        unknown = set(self.params) - set(spec["params"])
        if unknown:
            raise ConfigError(f"unknown parameter(s) for {self.scenario}: {sorted(unknown)}")
        merged = dict(spec["params"])
        merged.update(self.params)
        self.params = merged
        self.methods = tuple(self.methods) or spec["default"]
        bad = [m for m in self.methods if m not in spec["methods"]]
        if bad:
            raise ConfigError(f"method(s) {bad} not available for {self.scenario}; choose from {spec['methods']}")
        if int(self.reps) < 1 or int(self.n) < 1:
            raise ConfigError("reps and n must be >= 1")
        if int(self.workers) < 1:
            raise ConfigError("workers must be >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        self.reps, self.n, self.seed, self.workers = int(self.reps), int(self.n), int(self.seed), int(self.workers)
        self.sided = Sidedness.coerce(self.sided).value
        self.alphas = tuple(float(a) for a in self.alphas)
        self._check_params()

    def _check_params(self):
        p = self.params
        try:
            if self.scenario == "gamma_clt":
                if p["null_shape"] is None:
                    p["null_shape"] = p["shape"]
                if p["null_rate"] is None:
                    p["null_rate"] = p["rate"]
                FamilySpec.gamma(p["shape"], p["rate"])
                FamilySpec.gamma(p["null_shape"], p["null_rate"])
            elif self.scenario == "linkage":
                FamilySpec.multinomial_share(p["probs"])
            elif self.scenario == "logistic_gwas":
                if not 0 < p["maf"] < 1 or len(p["beta"]) != 4:
                    raise ValueError("maf must be in (0, 1) and beta must have 4 entries")
            else:
                if p["shape"] <= 0 or p["scale"] <= 0 or p["k"] < 1 or self.n <= p["k"] + 2:
                    raise ValueError("need shape, scale > 0 and n > k + 2")
            if "test_index" in p and not 0 <= p["test_index"] < self.n_params:
                raise ValueError("test_index out of range")
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid {self.scenario} parameters: {exc}") from None

    @property
    def n_params(self):
        if self.scenario == "logistic_gwas":
            return 4
        if self.scenario == "weibull_many_nuisance":
            return self.params["k"] + 2
        return 1

    def to_dict(self):
        d = asdict(self)
        d["methods"] = list(d["methods"])
        d["alphas"] = list(d["alphas"])
        return d


def replication_rng(seed, rep):
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, rep]))


def design_rng(seed):
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 1, 0]))


def _pv(z, sided, upper=False):
    if sided is Sidedness.TWO_SIDED:
        return float(min(1.0, 2.0 * normal_sf(abs(z))))
    return float(normal_sf(z) if upper else normal_cdf(z))


# ------------------------------------------------------------ scenarios

def _gwas_design(cfg, rng):
    n, maf = cfg.n, cfg.params["maf"]
    return np.column_stack([np.ones(n), rng.binomial(2, maf, n), rng.binomial(1, 0.5, n), rng.normal(20.0, 1.0, n)])


def _weibull_design(cfg, rng):
    return np.column_stack([np.ones(cfg.n), rng.normal(size=(cfg.n, cfg.params["k"]))])


_DESIGNS = {"logistic_gwas": _gwas_design, "weibull_many_nuisance": _weibull_design}


def _likelihood_methods(cfg, model, data, j, psi0, sided, upper, out, errs):
    """Wald, score, likelihood-root and r* p-values sharing two fits."""
    cache = {}

    def fits():
        if "full" not in cache:
            try:
                full = fit_mle(model, data)
                cache["full"] = (full, fit_constrained(model, data, j, psi0, start=full.estimates))
            except Exception as exc:  # recorded per replication
                cache["full"] = exc
        if isinstance(cache["full"], Exception):
            raise cache["full"]
        return cache["full"]

    for m in cfg.methods:
        if m not in ("wald", "score", "lr", "rstar"):
            continue
        try:
            if m == "score":
                p = _pv(score_test_glm(model, data, j, psi0).statistic, sided, upper)
            else:
                full, con = fits()
                if m == "wald":
                    p = _pv(wald_test(model, data, j, psi0, full).statistic, sided, upper)
                else:
                    res = rstar_pvalue(full, con, psi0, j, sided, upper)
                    p = _pv(res.r, sided, upper) if m == "lr" else res.p_value
            out[m] = p
        except Exception as exc:
            errs.append((m, f"{type(exc).__name__}: {exc}"))


def _replicate(cfg, rep, design):
    rng = replication_rng(cfg.seed, rep)
    sided = Sidedness.coerce(cfg.sided)
    prm = cfg.params
    out, errs = {}, []
    if cfg.scenario == "gamma_clt":
        x = rng.gamma(prm["shape"], 1.0 / prm["rate"], cfg.n)
        fam0 = FamilySpec.gamma(prm["null_shape"], prm["null_rate"])
        m = float(x.mean())
        for meth in cfg.methods:
            try:
                if meth == "normal":
                    out[meth] = normal_pvalue(fam0, cfg.n, m, sided)
                elif meth == "saddlepoint":
                    out[meth] = corrected_pvalue(fam0, cfg.n, m, sided)
            except Exception as exc:
                errs.append((meth, f"{type(exc).__name__}: {exc}"))
        # rate-based tests: a small mean is a large rate, so the one-sided
        # direction that matches p = Phi(S) is the upper tail in the rate
        _likelihood_methods(cfg, GammaKnownShape(prm["null_shape"]), DataSet(x, np.ones((cfg.n, 1))), 0,
                            prm["null_rate"], sided, True, out, errs)
    elif cfg.scenario == "linkage":
        counts = rng.multinomial(cfg.n, prm["probs"])
        try:
            score, wald = linkage_tests(counts, sided)
            out.update(score=score.p_value, wald=wald.p_value)
        except Exception as exc:
            errs.append(("wald", f"{type(exc).__name__}: {exc}"))
            s = math.sqrt(cfg.n) * (counts[2] - counts[0]) / cfg.n / math.sqrt(0.5)
            out["score"] = _pv(s, sided)
        out = {k: v for k, v in out.items() if k in cfg.methods}
        errs = [e for e in errs if e[0] in cfg.methods]
    else:
        X = design if prm["fixed_design"] else _DESIGNS[cfg.scenario](cfg, rng)
        if cfg.scenario == "logistic_gwas":
            y = rng.binomial(1, special.expit(X @ np.asarray(prm["beta"], dtype=float))).astype(float)
            model = LogisticRegression()
        else:
            y = prm["scale"] * rng.weibull(prm["shape"], cfg.n)
            model = WeibullRegression()
        _likelihood_methods(cfg, model, DataSet(y, X), prm["test_index"], prm["psi0"], sided, False, out, errs)
    return out, errs


def _run_chunk(cfg, start, stop):
    design = None
    if cfg.scenario in _DESIGNS and cfg.params["fixed_design"]:
        design = _DESIGNS[cfg.scenario](cfg, design_rng(cfg.seed))
    pv = {m: np.full(stop - start, np.nan) for m in cfg.methods}
    errors = []
    for i, rep in enumerate(range(start, stop)):
        out, errs = _replicate(cfg, rep, design)
        for m, v in out.items():
            pv[m][i] = v
        errors.extend((rep, m, msg) for m, msg in errs)
    return start, pv, errors


# ------------------------------------------------------------ results

def scenario_calibrations(cfg: ExperimentConfig):
    """Calibrations behind the Edgeworth predictions of a scenario.

    ``edgeworth`` describes the statistic as implemented (null
    standardization, true data distribution).  For linkage,
    ``correct_variance`` standardizes with the true variance instead.
    Scenarios without a closed-form calibration return an empty dict.
    """
    prm, out = cfg.params, {}
    if cfg.scenario == "gamma_clt":
        fam = FamilySpec.gamma(prm["shape"], prm["rate"])
        a0 = prm["null_shape"] / prm["null_rate"]
        b0 = math.sqrt(prm["null_shape"]) / prm["null_rate"]
        out["edgeworth"] = calibrate(fam, cfg.n, a0, b0)
    elif cfg.scenario == "linkage":
        fam = FamilySpec.multinomial_share(prm["probs"])
        out["edgeworth"] = calibrate(fam, cfg.n, 1.0, math.sqrt(0.5))
        out["correct_variance"] = calibrate(fam, cfg.n, 1.0, math.sqrt(cgf(fam, 0.0, 2)))
    return out


def theory_curves(cfg: ExperimentConfig, grid=STANDARD_GRID):
    """Edgeworth p-value CDFs on ``grid`` for each of :func:`scenario_calibrations`."""
    return {k: np.asarray(pvalue_cdf(cal, grid, cfg.sided), dtype=float)
            for k, cal in scenario_calibrations(cfg).items()}


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    pvalues: dict
    errors: list
    grid: np.ndarray
    ecdf: dict
    hist_edges: np.ndarray
    hist_counts: dict
    theory: dict
    wall_time: float

    @property
    def exclusions(self):
        return {m: int(np.isnan(v).sum()) for m, v in self.pvalues.items()}

    def summary(self):
        out = {"config": self.config.to_dict(), "wall_time_s": self.wall_time, "methods": {}}
        for m, p in self.pvalues.items():
            ok = p[~np.isnan(p)]
            s = {"reps": int(p.size), "excluded": int(p.size - ok.size)}
            if ok.size:
                s["type1_error"] = {repr(a): dict(zip(("rate", "se"), metrics.type1_error(ok, a)))
                                    for a in self.config.alphas}
                s["ks_uniform"] = metrics.ks_distance(self.ecdf[m], self.grid)
                s["ks_theory"] = {k: metrics.ks_distance(self.ecdf[m], v) for k, v in self.theory.items()}
            if ok.size >= metrics.MIN_SHAPE_SAMPLES:
                lab = metrics.classify_shape(ok)
                s["shape"] = {"label": lab.label.value, "low": lab.low, "high": lab.high,
                              "low_se": lab.low_se, "high_se": lab.high_se}
            out["methods"][m] = s
        msgs = {}
        for _, m, msg in self.errors:
            key = msg.split(":")[0]
            msgs.setdefault(m, {}).setdefault(key, 0)
            msgs[m][key] += 1
        out["errors"] = msgs
        return out


def run_experiment(cfg: ExperimentConfig, grid=STANDARD_GRID) -> ExperimentResult:
    """Run all replications of ``cfg`` and summarize them."""
    t0 = time.perf_counter()
    workers = min(cfg.workers, cfg.reps, os.cpu_count() or 1) if cfg.workers > 1 else 1
    nchunk = max(1, min(cfg.reps, 4 * workers))
    bounds = np.linspace(0, cfg.reps, nchunk + 1).astype(int)
    jobs = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if workers == 1:
        parts = [_run_chunk(cfg, a, b) for a, b in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_run_chunk, [cfg] * len(jobs), *zip(*jobs)))
    pv = {m: np.full(cfg.reps, np.nan) for m in cfg.methods}
    errors = []
    for start, chunk, errs in sorted(parts, key=lambda t: t[0]):
        for m, v in chunk.items():
            pv[m][start:start + v.size] = v
        errors.extend(errs)
    grid = np.asarray(grid, dtype=float)
    ecdf, hist_counts, edges = {}, {}, None
    for m, p in pv.items():
        if np.all(np.isnan(p)):
            continue
        ecdf[m] = metrics.empirical_cdf(p, grid)
        edges, hist_counts[m] = metrics.histogram(p, cfg.hist_bins)
    if edges is None:
        edges = np.linspace(0, 1, cfg.hist_bins + 1)
    return ExperimentResult(cfg, pv, errors, grid, ecdf, edges, hist_counts, theory_curves(cfg, grid),
                            time.perf_counter() - t0)
