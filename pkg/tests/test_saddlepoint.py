import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from pvaldist.cumulants import FamilySpec, cgf
from pvaldist.errors import DomainError, NoSaddlepointError
from pvaldist.saddlepoint import (FORMS, PATCH_RADIUS, corrected_pvalue, exact_pvalue, normal_pvalue,
                                  solve_saddlepoint, tail_prob)
from pvaldist.specialfn import normal_cdf

GAMMA = FamilySpec.gamma(0.01, 0.01)
N = 750
MEAN_DIST = stats.gamma(7.5, scale=1 / 7.5)

# exact upper tail, saddlepoint, normal approximation (two-sided)
TABLE = [
    (1.04e-05, 1.04e-05, 1.04e-10),
    (1.46e-05, 1.47e-05, 3.06e-10),
    (2.12e-05, 2.12e-05, 9.66e-10),
    (3.31e-05, 3.32e-05, 3.75e-09),
    (3.80e-05, 3.81e-05, 5.66e-09),
]


def test_gamma_saddlepoint_closed_form():
    sol = solve_saddlepoint(GAMMA, 1.5)
    assert sol.s_hat == pytest.approx(0.01 - 0.01 / 1.5, rel=1e-12)
    assert sol.s_hat == pytest.approx(0.0033333, abs=1e-7)
    assert sol.residual <= 1e-10 * 1.5 and sol.K2_at > 0


def test_saddlepoint_at_mean_is_zero():
    assert solve_saddlepoint(GAMMA, 1.0).s_hat == 0.0
    assert solve_saddlepoint(FamilySpec.binomial(4, 0.3), 1.2).s_hat == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("m", [0.0, -1.0])
def test_no_saddlepoint_outside_hull(m):
    with pytest.raises(NoSaddlepointError):
        solve_saddlepoint(GAMMA, m)


def test_no_saddlepoint_on_lattice_boundary():
    with pytest.raises(NoSaddlepointError):
        solve_saddlepoint(FamilySpec.multinomial_share([0.25, 0.5, 0.25]), 2.0)


@settings(max_examples=100)
@given(st.floats(0.02, 40.0))
def test_residual_contract_gamma(m):
    sol = solve_saddlepoint(GAMMA, m)
    assert abs(cgf(GAMMA, sol.s_hat, 1) - m) <= 1e-10 * max(1.0, m)
    assert sol.residual <= 1e-10 * max(1.0, m)


@settings(max_examples=100)
@given(st.floats(-2.95, 6.95))
def test_residual_contract_discrete(m):
    fam = FamilySpec.tabulated([-3.0, 0.0, 1.0, 7.0], [0.1, 0.4, 0.3, 0.2])
    sol = solve_saddlepoint(fam, m)
    assert abs(cgf(fam, sol.s_hat, 1) - m) <= 1e-10 * max(1.0, abs(m))


def test_symmetric_family_at_mean():
    fam = FamilySpec.tabulated([-1.0, 1.0], [0.5, 0.5])
    for form in FORMS:
        assert tail_prob(fam, 10, 0.0, form) == pytest.approx(0.5, abs=1e-15)
        assert corrected_pvalue(fam, 10, 0.0, form=form) == 1.0


@pytest.mark.parametrize("row", TABLE)
def test_table_rows(row):
    p_exact, p_sp, p_norm = row
    m = MEAN_DIST.isf(p_exact)
    got = tail_prob(GAMMA, N, m, upper=True)
    # three significant figures, allowing for the rounding of the exact column
    assert abs(got - p_sp) <= 0.011e-5
    assert got == pytest.approx(p_exact, rel=0.01)
    assert normal_pvalue(GAMMA, N, m) == pytest.approx(p_norm, rel=0.02)
    assert exact_pvalue(GAMMA, N, m, "one_sided", upper=True) == pytest.approx(p_exact, rel=1e-9)


@pytest.mark.parametrize("form", FORMS)
def test_tail_grid_relative_error(form):
    for p in np.geomspace(1e-5, 1e-3, 50):
        up = tail_prob(GAMMA, N, MEAN_DIST.isf(p), form, upper=True)
        lo = tail_prob(GAMMA, N, MEAN_DIST.ppf(p), form)
        assert abs(up / p - 1) <= 0.01
        assert abs(lo / p - 1) <= 0.01


def test_normal_approximation_far_off():
    p = 1.04e-5
    m = MEAN_DIST.isf(p)
    assert p / normal_pvalue(GAMMA, N, m, "one_sided", upper=True) >= 1e3
    for q in np.geomspace(1e-6, 1e-4, 10):
        mq = MEAN_DIST.isf(q)
        assert abs(normal_pvalue(GAMMA, N, mq, "one_sided", upper=True) / q - 1) > 10 * abs(
            tail_prob(GAMMA, N, mq, upper=True) / q - 1)


@pytest.mark.parametrize("form", FORMS)
def test_monotone_through_patch(form):
    xs = np.linspace(0.9999, 1.0001, 401)
    v = np.array([tail_prob(GAMMA, N, x, form) for x in xs])
    assert np.all(np.diff(v) > 0)
    wide = np.array([tail_prob(GAMMA, N, x, form) for x in np.linspace(0.3, 2.5, 200)])
    assert np.all(np.diff(wide) > 0)


def _boundary(sign):
    from scipy.optimize import brentq

    def r_of(m):
        s = solve_saddlepoint(GAMMA, m)
        return math.copysign(math.sqrt(max(2 * N * (s.s_hat * m - s.K_at), 0.0)), s.s_hat)

    return brentq(lambda m: abs(r_of(m)) - PATCH_RADIUS, 1.0, 1.0 + sign * 0.05, xtol=1e-15)


@pytest.mark.parametrize("sign", [1, -1])
@pytest.mark.parametrize("form", FORMS)
def test_continuity_at_patch_boundary(sign, form):
    mb = _boundary(sign)
    a = tail_prob(GAMMA, N, mb * (1 - 1e-13), form)
    b = tail_prob(GAMMA, N, mb * (1 + 1e-13), form)
    assert abs(a - b) <= 1e-8


@pytest.mark.parametrize("mean,sd,n", [(0.3, 2.0, 5), (-4.0, 0.1, 1), (0.0, 1.0, 1000)])
def test_gaussian_lugannani_rice_exact(mean, sd, n):
    fam = FamilySpec.normal(mean, sd)
    for x in mean + sd * np.linspace(-3, 3, 41) / math.sqrt(n):
        ref = normal_cdf(math.sqrt(n) * (x - mean) / sd)
        assert abs(tail_prob(fam, n, x) - ref) <= 1e-12
        assert exact_pvalue(fam, n, x, "one_sided") == pytest.approx(ref, abs=1e-15)


def test_deep_tails_stay_relative():
    # the lower-tail ratio tends to the Stirling factor 1 + 1/(12 * 7.5)
    for p in (1e-30, 1e-100, 1e-250):
        assert tail_prob(GAMMA, N, MEAN_DIST.isf(p), upper=True) / p == pytest.approx(1.0, rel=0.02)
        assert tail_prob(GAMMA, N, MEAN_DIST.ppf(p)) / p == pytest.approx(1.0, rel=0.02)


def test_two_sided_rule():
    m = MEAN_DIST.isf(1e-4)
    up = tail_prob(GAMMA, N, m, upper=True)
    assert corrected_pvalue(GAMMA, N, m) == pytest.approx(2 * up, rel=1e-14)
    assert corrected_pvalue(GAMMA, N, m, "one_sided", upper=True) == up
    assert corrected_pvalue(GAMMA, N, 1.0) <= 1.0
    assert exact_pvalue(GAMMA, N, m) == pytest.approx(2e-4, rel=1e-9)


def test_lower_and_upper_tails_sum_to_one_near_centre():
    for m in (0.8, 1.0, 1.3):
        total = tail_prob(GAMMA, N, m) + tail_prob(GAMMA, N, m, upper=True)
        assert total == pytest.approx(1.0, abs=1e-14)


def test_exact_unavailable_for_discrete():
    assert exact_pvalue(FamilySpec.binomial(3, 0.4), 10, 1.1) is None


def test_bad_form_and_n():
    with pytest.raises(DomainError):
        tail_prob(GAMMA, N, 1.2, form="skovgaard")
    with pytest.raises(DomainError):
        tail_prob(GAMMA, 0, 1.2)


def test_null_uniformity_small_sample():
    rng = np.random.default_rng(5)
    means = rng.gamma(7.5, 1 / 7.5, 20000)
    p = np.array([corrected_pvalue(GAMMA, N, m) for m in means])
    assert stats.kstest(p, "uniform").statistic <= 0.015
