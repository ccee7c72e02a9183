import numpy as np
import pytest

from pvaldist.errors import ConfigError
from pvaldist.harness import (STANDARD_GRID, ExperimentConfig, replication_rng, run_experiment, scenario_calibrations,
                              theory_curves)


def test_standard_grid():
    assert STANDARD_GRID.size == 991
    assert STANDARD_GRID[0] == 0.005 and STANDARD_GRID[-1] == 0.995


def test_replication_streams_are_independent_of_order():
    a = replication_rng(7, 3).random(4)
    replication_rng(7, 2).random(100)
    assert np.array_equal(a, replication_rng(7, 3).random(4))
    assert not np.array_equal(a, replication_rng(7, 4).random(4))
    assert not np.array_equal(a, replication_rng(8, 3).random(4))


def test_config_defaults_and_validation():
    cfg = ExperimentConfig("gamma_clt", 750, 10)
    assert cfg.methods == ("normal",)
    assert cfg.params["null_rate"] == 0.01
    assert ExperimentConfig("linkage", 400, 5).methods == ("score", "wald")
    for kw in ({"scenario": "poisson"}, {"reps": 0}, {"methods": ("saddlepoint",), "scenario": "linkage"},
               {"params": {"rate": -1.0}}, {"params": {"bogus": 1}}, {"sided": "both"}, {"workers": 0}):
        args = {"scenario": "gamma_clt", "n": 10, "reps": 5} | kw
        with pytest.raises((ConfigError, ValueError)):
            ExperimentConfig(**args)
    with pytest.raises(ConfigError):
        ExperimentConfig("weibull_many_nuisance", 40, 5, params={"k": 50})


def test_config_round_trip():
    cfg = ExperimentConfig("logistic_gwas", 300, 4, seed=3)
    again = ExperimentConfig(**cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()


@pytest.mark.parametrize("scenario,n,methods", [
    ("gamma_clt", 750, ("normal", "saddlepoint", "rstar", "lr", "wald")),
    ("linkage", 400, ("score", "wald")),
    ("logistic_gwas", 800, ("wald", "score", "lr", "rstar")),
    ("weibull_many_nuisance", 60, ("wald", "lr", "rstar")),
])
def test_determinism_across_worker_counts(scenario, n, methods):
    params = {"k": 5} if scenario == "weibull_many_nuisance" else {}
    runs = [run_experiment(ExperimentConfig(scenario, n, 24, seed=11, methods=methods, workers=w, params=params))
            for w in (1, 3)]
    for m in methods:
        assert np.array_equal(runs[0].pvalues[m], runs[1].pvalues[m], equal_nan=True)
    assert runs[0].errors == runs[1].errors


def test_same_seed_same_result_different_seed_differs():
    a = run_experiment(ExperimentConfig("gamma_clt", 50, 30, seed=1)).pvalues["normal"]
    b = run_experiment(ExperimentConfig("gamma_clt", 50, 30, seed=1)).pvalues["normal"]
    c = run_experiment(ExperimentConfig("gamma_clt", 50, 30, seed=2)).pvalues["normal"]
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_gamma_methods_agree_on_direction():
    res = run_experiment(ExperimentConfig("gamma_clt", 200, 200, seed=4, sided="one_sided",
                                          methods=("normal", "saddlepoint", "rstar", "lr", "wald"),
                                          params={"shape": 1.0, "rate": 1.0}))
    p = res.pvalues
    for m in ("saddlepoint", "rstar", "lr", "wald"):
        assert np.corrcoef(p["normal"], p[m])[0, 1] > 0.99


def test_result_summary_layout():
    res = run_experiment(ExperimentConfig("linkage", 400, 1200, seed=5))
    s = res.summary()
    assert set(s["methods"]) == {"score", "wald"}
    score = s["methods"]["score"]
    assert set(score["type1_error"]) == {"0.0001", "0.001", "0.01", "0.05"}
    assert set(score["ks_theory"]) == {"edgeworth", "correct_variance"}
    assert score["shape"]["label"].startswith("Shape")
    assert res.hist_edges.size == 51 and res.hist_counts["score"].sum() == 1200
    assert res.ecdf["score"].shape == STANDARD_GRID.shape


def test_degenerate_wald_excluded_and_recorded():
    res = run_experiment(ExperimentConfig("linkage", 2, 200, seed=6, params={"probs": [0.05, 0.9, 0.05]}))
    assert res.exclusions["wald"] > 0 and res.exclusions["score"] == 0
    assert all(m == "wald" for _, m, _ in res.errors)
    assert res.summary()["errors"]["wald"]["DegenerateError"] == res.exclusions["wald"]


def test_scenario_calibrations():
    cal = scenario_calibrations(ExperimentConfig("gamma_clt", 750, 1, params={"rate": 0.01 / 1.05,
                                                                               "null_rate": 0.01}))
    assert cal["edgeworth"].cumulants.v_n == pytest.approx(1.05)
    link = scenario_calibrations(ExperimentConfig("linkage", 400, 1, params={"probs": [0.09, 0.8, 0.11]}))
    assert link["correct_variance"].cumulants.v_n == pytest.approx(1.0)
    assert link["edgeworth"].cumulants.v_n == pytest.approx(np.sqrt(0.1996 / 0.5))
    assert scenario_calibrations(ExperimentConfig("logistic_gwas", 300, 1)) == {}
    curves = theory_curves(ExperimentConfig("gamma_clt", 750, 1))
    assert curves["edgeworth"].shape == STANDARD_GRID.shape
