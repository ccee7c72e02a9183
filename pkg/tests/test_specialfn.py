import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from pvaldist.errors import DomainError
from pvaldist.specialfn import hermite, normal_cdf, normal_pdf, normal_quantile, normal_sf, periodic_q

finite = st.floats(-10, 10, allow_nan=False)


def test_pdf_values():
    assert normal_pdf(0.0) == pytest.approx(0.3989422804014327, rel=1e-15)
    assert normal_pdf(1.0) == pytest.approx(0.24197072451914337, rel=1e-15)
    assert normal_pdf(-1.0) == normal_pdf(1.0)


def test_cdf_values():
    assert normal_cdf(0.0) == 0.5
    assert normal_cdf(1.959963984540054) == pytest.approx(0.975, rel=1e-14)
    assert normal_cdf(-8.0) == pytest.approx(6.22096057427178e-16, rel=1e-12)


# 40-digit reference values of Phi(t)
PHI_REF = {
    -8.0: 6.2209605742717841e-16,
    -7.74: 4.9708407141619597261e-15,
    -5.5: 1.8989562465887719384e-8,
    -3.3: 0.0004834241423837775071,
    -1.1: 0.13566606094638265582,
    0.7: 0.75803634777692697138,
    2.9: 0.99813418669961596152,
    6.2: 0.9999999997176841963,
    8.0: 0.9999999999999993779,
}


@pytest.mark.parametrize("t", sorted(PHI_REF))
def test_cdf_relative_accuracy(t):
    assert abs(normal_cdf(t) / PHI_REF[t] - 1) <= 1e-14


def test_cdf_agrees_with_erfc_everywhere():
    t = np.linspace(-8, 8, 1601)
    ref = 0.5 * special.erfc(-t / math.sqrt(2))
    # scipy's value carries the argument rounding, about 2 t^2 eps relative
    assert np.all(np.abs(normal_cdf(t) / ref - 1) <= 4 * (1 + t * t) * np.finfo(float).eps)


def test_upper_tail_not_formed_by_subtraction():
    # 1 - Phi(37) would be 0
    assert normal_sf(37.0) == pytest.approx(5.7255712225245768e-300, rel=1e-13)
    assert normal_sf(10.0) == pytest.approx(7.6198530241605261e-24, rel=1e-14)
    assert normal_cdf(-37.0) == normal_sf(37.0)


def test_array_and_scalar_returns():
    assert isinstance(normal_cdf(0.3), float)
    out = normal_cdf(np.array([0.0, 1.0]))
    assert isinstance(out, np.ndarray) and out.shape == (2,)


@pytest.mark.parametrize("f", [normal_pdf, normal_cdf, normal_sf])
def test_non_finite_rejected(f):
    with pytest.raises(DomainError):
        f(float("nan"))
    with pytest.raises(DomainError):
        f(np.array([0.0, np.inf]))


def test_quantile_values():
    assert normal_quantile(0.5) == 0.0
    assert normal_quantile(0.975) == pytest.approx(1.959963984540054, abs=1e-13)
    assert normal_quantile(1e-10) == pytest.approx(-6.361340902404056, abs=1e-9)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_quantile_domain(p):
    with pytest.raises(DomainError):
        normal_quantile(p)


def test_quantile_residual_contract():
    p = np.concatenate([np.geomspace(1e-300, 0.5, 400), 1 - np.geomspace(1e-15, 0.5, 100)])
    z = normal_quantile(p)
    lower = p < 0.5
    resid = np.where(lower, np.abs(normal_cdf(z) - p), np.abs(normal_sf(z) - (1 - p)))
    tail = np.minimum(p, 1 - p)
    # Phi(z) carries a relative rounding error of about z^2 eps; that floor
    # exceeds 1e-13 only for p below roughly 1e-100
    bound = np.maximum(1e-13, 2 * z * z * np.finfo(float).eps) * tail
    assert np.all(resid <= bound)
    assert np.all(resid[tail > 1e-100] <= 1e-13 * tail[tail > 1e-100])


def test_quantile_matches_ndtri():
    p = np.geomspace(1e-300, 0.999999, 2000)
    assert np.max(np.abs(normal_quantile(p) - special.ndtri(p))) < 1e-12


@given(st.floats(-6, 6))
def test_round_trip(t):
    p = normal_cdf(t)
    # for t above about 5.4, p = Phi(t) is within 1e-8 of 1 and its own
    # rounding (half an ulp) already moves the quantile by more than 1e-9
    floor = np.spacing(p) / normal_pdf(t)
    assert abs(normal_quantile(p) - t) <= max(1e-9, floor)


@given(st.floats(-6, 6))
def test_round_trip_through_smaller_tail(t):
    p = normal_cdf(-abs(t))
    assert abs(normal_quantile(p) + abs(t)) <= 1e-9


def test_hermite_examples():
    assert hermite(2, 0.0) == -1.0
    assert hermite(3, 1.0) == -2.0
    assert hermite(5, 1.0) == 6.0
    assert hermite(0, 3.3) == 1.0
    t = 1.7
    assert hermite(6, t) == pytest.approx(t ** 6 - 15 * t ** 4 + 45 * t ** 2 - 15, rel=1e-13)


@pytest.mark.parametrize("j", [-1, 7, 2.5])
def test_hermite_order_domain(j):
    with pytest.raises(DomainError):
        hermite(j, 0.0)


@given(finite, st.integers(1, 5))
def test_hermite_recurrence(t, j):
    lhs = hermite(j + 1, t)
    rhs = t * hermite(j, t) - j * hermite(j - 1, t)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs), abs(t * hermite(j, t)), abs(j * hermite(j - 1, t)))


@settings(max_examples=50)
@given(st.floats(-5, 5), st.integers(0, 5))
def test_hermite_derivative_identity(t, j):
    h = 1e-5
    num = (normal_pdf(t + h) * hermite(j, t + h) - normal_pdf(t - h) * hermite(j, t - h)) / (2 * h)
    assert abs(num + normal_pdf(t) * hermite(j + 1, t)) <= 1e-6


def test_periodic_q_examples():
    assert periodic_q(1, 0.25) == -0.25
    assert periodic_q(1, 3.25) == -0.25
    assert periodic_q(2, 0.0) == pytest.approx(1 / 6)
    assert periodic_q(1, 0.0) == -0.5
    # Bernoulli polynomial B2(u) = u^2 - u + 1/6
    assert periodic_q(2, 0.5) == pytest.approx(-1 / 12)


def test_periodic_q_has_zero_mean():
    u = (np.arange(100000) + 0.5) / 100000
    assert abs(np.mean(periodic_q(1, u))) < 1e-12
    assert abs(np.mean(periodic_q(2, u))) < 1e-9


@given(st.floats(-50, 50), st.integers(-20, 20), st.sampled_from([1, 2]))
def test_periodicity(t, k, j):
    # exact after range reduction whenever t + k is representable without loss
    a, b = periodic_q(j, t), periodic_q(j, t + k)
    assert abs(a - b) <= 64 * np.finfo(float).eps * (abs(t) + abs(k) + 1)


def test_periodicity_exact_on_dyadic_points():
    t = np.arange(-64, 64) / 8.0
    for j in (1, 2):
        for k in (-3, 1, 7):
            assert np.array_equal(periodic_q(j, t), periodic_q(j, t + k))


def test_periodic_q_order_domain():
    with pytest.raises(DomainError):
        periodic_q(3, 0.1)
