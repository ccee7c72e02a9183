"""Saddlepoint tail probabilities for the mean of iid observations.

``tail_prob`` supports the Lugannani-Rice formula and the normal
approximation to the modified root ``r + log(u/r)/r``.  Near the mean both
formulas have a removable singularity; there ``1/r - 1/u`` is replaced by its
second-order expansion in the offset ``Xbar - E[X]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .cumulants import FamilySpec, cgf
from .edgeworth import Sidedness
from .errors import ConvergenceError, DomainError, NoSaddlepointError
from .specialfn import normal_cdf, normal_pdf, normal_sf

__all__ = [
    "SaddleSolution",
    "solve_saddlepoint",
    "tail_prob",
    "corrected_pvalue",
    "normal_pvalue",
    "exact_pvalue",
    "FORMS",
]

FORMS = ("lugannani_rice", "rstar_form")
PATCH_RADIUS = 1e-3  # |r| below which the series replaces 1/r - 1/u
_NEWTON_MAXIT = 200


@dataclass(frozen=True)
class SaddleSolution:
    s_hat: float
    K_at: float
    K2_at: float
    residual: float
    iterations: int


def _bracket(family, target, f0):
    """Interval (lo, hi) inside the strip with K'(lo) < target < K'(hi)."""
    strip_lo, strip_hi = family.strip
    step = 1.0 / math.sqrt(cgf(family, 0.0, 2))
    trace = []
    if f0 < 0:
        lo, hi = 0.0, step
        while True:
            if hi >= strip_hi:
                hi = 0.5 * (lo + strip_hi)
            fh = cgf(family, hi, 1) - target
            trace.append((hi, fh))
            if fh > 0:
                return lo, hi, trace
            lo = hi
            hi = lo + 2 * (lo - 0.0 if lo > 0 else step)
            if len(trace) > 2000:
                raise ConvergenceError("could not bracket the saddlepoint", trace)
    lo, hi = -step, 0.0
    while True:
        fl = cgf(family, lo, 1) - target
        trace.append((lo, fl))
        if fl < 0:
            return lo, hi, trace
        hi, lo = lo, 2 * lo
        if len(trace) > 2000 or not math.isfinite(lo) or lo < strip_lo:
            raise ConvergenceError("could not bracket the saddlepoint", trace)


def solve_saddlepoint(family: FamilySpec, target_mean: float) -> SaddleSolution:
    """Solve ``K'(s) = target_mean`` by Newton's method inside a bisection bracket."""
    m = float(target_mean)
    h_lo, h_hi = family.hull
    if not (h_lo < m < h_hi):
        raise NoSaddlepointError(f"target mean {m!r} is not inside the support hull ({h_lo}, {h_hi})")
    # relative: targets near zero (gamma lower tail) need digits of their own
    tol = 1e-13 * abs(m) if m != 0.0 else 1e-15
    f0 = cgf(family, 0.0, 1) - m
    if f0 == 0.0:
        return SaddleSolution(0.0, 0.0, cgf(family, 0.0, 2), 0.0, 0)
    lo, hi, trace = _bracket(family, m, f0)
    s = 0.0 if lo < 0.0 < hi else 0.5 * (lo + hi)
    it = 0
    for it in range(1, _NEWTON_MAXIT + 1):
        f = cgf(family, s, 1) - m
        trace.append((s, f))
        if abs(f) <= tol:
            break
        if f > 0:
            hi = s
        else:
            lo = s
        step = f / cgf(family, s, 2)
        cand = s - step
        s = cand if lo < cand < hi else 0.5 * (lo + hi)
        if hi - lo <= 4 * np.spacing(max(abs(lo), abs(hi))):
            break
    else:
        raise ConvergenceError("saddlepoint Newton iteration did not converge", trace)
    resid = abs(cgf(family, s, 1) - m)
    if resid > 1e-10 * max(1.0, abs(m)):
        raise ConvergenceError(f"saddlepoint residual {resid:g} above tolerance", trace)
    return SaddleSolution(s, cgf(family, s, 0), cgf(family, s, 2), resid, it)


def _series_d(family, n, delta):
    """Second-order expansion of 1/r - 1/u about the mean."""
    k2, k3, k4, k5 = (cgf(family, 0.0, j) for j in (2, 3, 4, 5))
    a = k3 / (6 * k2 ** 1.5)
    b = (3 * k2 * k4 - 5 * k3 ** 2) / (24 * k2 ** 3.5)
    c = (108 * k2 ** 2 * k5 - 675 * k2 * k3 * k4 + 700 * k3 ** 3) / (2160 * k2 ** 5.5)
    return (a + b * delta + c * delta * delta) / math.sqrt(n)


def _roots(family, n, m):
    sol = solve_saddlepoint(family, m)
    s = sol.s_hat
    w2 = max(2.0 * (s * m - sol.K_at), 0.0)
    r = math.copysign(math.sqrt(n * w2), s) if s != 0 else 0.0
    u = s * math.sqrt(n * sol.K2_at)
    if abs(r) < PATCH_RADIUS:
        d = _series_d(family, n, m - cgf(family, 0.0, 1))
        patched = True
    else:
        d = 1.0 / r - 1.0 / u
        patched = False
    return r, d, patched


def tail_prob(family: FamilySpec, n: int, observed_mean: float, form="lugannani_rice", upper=False):
    """Saddlepoint approximation to ``P(Xbar < observed_mean)`` (``upper=False``)
    or ``P(Xbar > observed_mean)``."""
    if form not in FORMS:
        raise DomainError(f"form must be one of {FORMS}, got {form!r}")
    n = int(n)
    if n < 1:
        raise DomainError("n must be >= 1")
    r, d, _ = _roots(family, n, float(observed_mean))
    if form == "lugannani_rice":
        if upper:
            return float(normal_sf(r) - normal_pdf(r) * d)
        return float(normal_cdf(r) + normal_pdf(r) * d)
    rs = d if r == 0.0 else r - math.log1p(-r * d) / r
    return float(normal_sf(rs) if upper else normal_cdf(rs))


def corrected_pvalue(family: FamilySpec, n: int, observed_mean: float, sided="two_sided",
                     upper=False, form="lugannani_rice"):
    """Saddlepoint p-value.  Two-sided uses ``min(1, 2 min(lower, upper))``;
    one-sided returns the lower tail unless ``upper`` is set."""
    sided = Sidedness.coerce(sided)
    if sided is Sidedness.ONE_SIDED:
        p = tail_prob(family, n, observed_mean, form, upper=upper)
    else:
        lo = tail_prob(family, n, observed_mean, form, upper=False)
        hi = tail_prob(family, n, observed_mean, form, upper=True)
        p = 2.0 * min(lo, hi)
    return min(1.0, max(0.0, p))


def normal_pvalue(family: FamilySpec, n: int, observed_mean: float, sided="two_sided", upper=False):
    """First-order p-value from ``S = sqrt(n)(Xbar - E X)/sd(X)``."""
    sided = Sidedness.coerce(sided)
    s = math.sqrt(n) * (observed_mean - cgf(family, 0.0, 1)) / math.sqrt(cgf(family, 0.0, 2))
    if sided is Sidedness.TWO_SIDED:
        return float(2.0 * normal_sf(abs(s)))
    return float(normal_sf(s) if upper else normal_cdf(s))


def exact_pvalue(family: FamilySpec, n: int, observed_mean: float, sided="two_sided", upper=False):
    """Exact p-value where the distribution of the mean is available in closed
    form (gamma and normal families); ``None`` otherwise."""
    sided = Sidedness.coerce(sided)
    m = float(observed_mean)
    if family.kind == "gamma":
        # n * Xbar ~ Gamma(n * shape, rate)
        a, x = n * family.shape, n * family.rate * max(m, 0.0)
        lo, hi = float(special.gammainc(a, x)), float(special.gammaincc(a, x))
    elif family.kind == "normal":
        z = math.sqrt(n) * (m - family.mean) / family.sd
        lo, hi = float(normal_cdf(z)), float(normal_sf(z))
    else:
        return None
    if sided is Sidedness.TWO_SIDED:
        return min(1.0, 2.0 * min(lo, hi))
    return hi if upper else lo
