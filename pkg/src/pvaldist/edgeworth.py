"""Edgeworth approximations to the distribution of one- and two-sided p-values.

For a statistic with mean ``mu_n``, sd ``v_n`` and standardized cumulants
``rho3``, ``rho4`` the CDF of the standardized statistic is approximated by
``F(z) = Phi(z) + E2(z)`` (plus the lattice term ``C2`` for discrete data).
The p-value conventions are ``p = Phi(S)`` (one-sided) and
``p = 2 (1 - Phi(|S|))`` (two-sided).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .cumulants import LatticeSpec, TestStatCalibration
from .errors import DomainError
from .specialfn import hermite, normal_cdf, normal_pdf, normal_quantile, normal_sf, periodic_q

__all__ = [
    "Sidedness",
    "PValueCurve",
    "e2",
    "c2",
    "lattice_geometry",
    "statistic_cdf",
    "pvalue_cdf",
    "pvalue_pdf",
    "pvalue_curve",
]


class Sidedness(str, enum.Enum):
    ONE_SIDED = "one_sided"
    TWO_SIDED = "two_sided"

    @classmethod
    def coerce(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(f"sidedness must be 'one_sided' or 'two_sided', got {value!r}") from None


def e2(t, rho3, rho4):
    """Second-order Edgeworth term (skewness and kurtosis corrections)."""
    t = np.asarray(t, dtype=float)
    val = -normal_pdf(t) * (rho3 * hermite(2, t) / 6.0
                            + rho4 * hermite(3, t) / 24.0
                            + rho3 * rho3 * hermite(5, t) / 72.0)
    return float(val) if np.ndim(val) == 0 else val


def _e2_deriv(t, rho3, rho4):
    # d/dt [phi He_j] = -phi He_{j+1}
    return normal_pdf(t) * (rho3 * hermite(3, t) / 6.0
                            + rho4 * hermite(4, t) / 24.0
                            + rho3 * rho3 * hermite(6, t) / 72.0)


def lattice_geometry(lattice: LatticeSpec, n: int, v_n: float):
    """Span and origin of the lattice carrying ``(S_n - mu_n) / v_n``."""
    scale = math.sqrt(n) * lattice.b_n * v_n
    return lattice.span / scale, n * lattice.offset / scale


def c2(t, rho3, lattice: LatticeSpec, n: int, v_n: float):
    """Lattice (continuity) term of the Edgeworth CDF.

    Euler-Maclaurin summation of the local expansion over lattice points of
    span ``h``: ``-h Q1(u) g(t) + h^2/2 Q2(u) g'(t)`` where ``g`` is the
    first-order Edgeworth density and ``u`` the position of ``t`` inside its
    lattice cell.
    """
    if n < 1 or not v_n > 0:
        raise DomainError("n must be >= 1 and v_n > 0")
    t = np.asarray(t, dtype=float)
    h, origin = lattice_geometry(lattice, n, v_n)
    u = (t - origin) / h
    dens = normal_pdf(t)
    g = dens * (1.0 + rho3 * hermite(3, t) / 6.0)
    g_prime = -dens * t
    val = -h * periodic_q(1, u) * g + 0.5 * h * h * periodic_q(2, u) * g_prime
    return float(val) if np.ndim(val) == 0 else val


def statistic_cdf(cal: TestStatCalibration, z, upper=False, corrections=True):
    """Approximate ``P(T <= z)`` (or ``P(T > z)``) for the standardized statistic."""
    cs = cal.cumulants
    z = np.asarray(z, dtype=float)
    base = normal_sf(z) if upper else normal_cdf(z)
    if not corrections:
        return base
    corr = e2(z, cs.rho3, cs.rho4)
    if cal.lattice is not None:
        corr = corr + c2(z, cs.rho3, cal.lattice, cs.n, cs.v_n)
    return base - corr if upper else base + corr


def _check_t(t):
    arr = np.asarray(t, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError("t must lie strictly inside (0, 1)")
    return arr


def pvalue_cdf(cal: TestStatCalibration, t, sided="two_sided", corrections=True):
    """Approximate ``P(p(S_n) <= t)``.

    ``corrections=False`` keeps only the normal term with the calibrated mean
    and variance.
    """
    sided = Sidedness.coerce(sided)
    t = _check_t(t)
    cs = cal.cumulants
    if sided is Sidedness.ONE_SIDED:
        z = (normal_quantile(t) - cs.mu_n) / cs.v_n
        out = statistic_cdf(cal, z, corrections=corrections)
    else:
        zq = normal_quantile(0.5 * t)  # negative
        lo = (zq - cs.mu_n) / cs.v_n
        hi = (-zq - cs.mu_n) / cs.v_n
        out = (statistic_cdf(cal, lo, corrections=corrections)
               + statistic_cdf(cal, hi, upper=True, corrections=corrections))
    return float(out) if np.ndim(out) == 0 else out


def pvalue_pdf(cal: TestStatCalibration, t, sided="two_sided", corrections=True):
    """Density of the p-value, the analytic t-derivative of :func:`pvalue_cdf`."""
    if cal.lattice is not None:
        raise DomainError("the p-value of a lattice statistic has no density")
    sided = Sidedness.coerce(sided)
    t = _check_t(t)
    cs = cal.cumulants

    def dens(z):
        d = normal_pdf(z)
        if corrections:
            d = d + _e2_deriv(z, cs.rho3, cs.rho4)
        return d

    if sided is Sidedness.ONE_SIDED:
        zt = normal_quantile(t)
        out = dens((zt - cs.mu_n) / cs.v_n) / (cs.v_n * normal_pdf(zt))
    else:
        zq = normal_quantile(0.5 * t)
        jac = 1.0 / (2.0 * cs.v_n * normal_pdf(zq))
        out = (dens((zq - cs.mu_n) / cs.v_n) + dens((-zq - cs.mu_n) / cs.v_n)) * jac
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class PValueCurve:
    """Theoretical p-value CDF (and PDF when it exists) on a grid.

    Values outside [0, 1] are kept as computed; ``out_of_range`` flags them.
    """

    grid: np.ndarray
    cdf: np.ndarray
    pdf: np.ndarray | None
    calibration: TestStatCalibration
    sided: Sidedness
    continuity: str

    @property
    def out_of_range(self):
        return (self.cdf < 0.0) | (self.cdf > 1.0)

    def clamped(self):
        return np.clip(self.cdf, 0.0, 1.0)


def pvalue_curve(cal: TestStatCalibration, grid, sided="two_sided") -> PValueCurve:
    sided = Sidedness.coerce(sided)
    g = np.atleast_1d(np.asarray(grid, dtype=float))
    if g.ndim != 1 or g.size == 0:
        raise DomainError("grid must be a non-empty 1-d sequence")
    bad = np.flatnonzero(~((g > 0) & (g < 1)))
    if bad.size:
        raise DomainError(f"grid[{bad[0]}]={g[bad[0]]!r} is outside (0, 1)")
    dec = np.flatnonzero(np.diff(g) <= 0)
    if dec.size:
        raise DomainError(f"grid must be strictly increasing; grid[{dec[0] + 1}] <= grid[{dec[0]}]")
    cdf = np.asarray(pvalue_cdf(cal, g, sided), dtype=float).reshape(g.shape)
    if cal.lattice is None:
        pdf = np.asarray(pvalue_pdf(cal, g, sided), dtype=float).reshape(g.shape)
        continuity = "continuous"
    else:
        pdf = None
        continuity = "lattice"
    return PValueCurve(g, cdf, pdf, cal, sided, continuity)
