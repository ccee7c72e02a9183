"""Modified likelihood root ``r* = r + log(Q/r)/r`` for one scalar parameter.

Two constructions of ``Q`` are available:

``information``
    ``(psi_hat - psi0) sqrt(j_p) sqrt(|j_ll(full)| / |j_ll(constrained)|)``
    with ``j_p = 1/[j^-1]_psi,psi`` the profile information.  Exact for
    canonical parameters of full exponential families.
``ancillary``
    Sample-space derivative form for models that expose
    ``sample_space_phi`` (regression-scale models such as Weibull):
    ``det[phi(th_hat) - phi(th_0), phi_lambda(th_0)] / det phi_theta(th_hat)
    * sqrt(|j(th_hat)| / |j_ll(th_0)|)``.

``auto`` picks ``ancillary`` whenever the model supports it.

Close to ``psi_hat`` the ratio ``Q/r`` is 0/0.  For ``|r|`` below the patch
radius the correction ``r* - r`` is interpolated linearly in ``psi0``
between two refitted anchors at ``psi_hat -+ radius * se``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .edgeworth import Sidedness
from .errors import DomainError
from .models import ModelFit, fit_constrained, fit_mle
from .specialfn import normal_cdf, normal_sf

__all__ = ["RStarResult", "likelihood_root", "q_factor", "rstar_pvalue", "rstar_test", "PATCH_RADIUS"]

PATCH_RADIUS = 0.05
Q_METHODS = ("auto", "information", "ancillary")


@dataclass(frozen=True)
class RStarResult:
    r: float
    q: float
    r_star: float
    p_value: float
    patched: bool = False
    fallback: bool = False


def _pinned(constrained: ModelFit, j=None, psi0=None):
    if constrained.fixed is None and (j is None or psi0 is None):
        raise DomainError("constrained fit carries no pinned parameter; pass j and psi0")
    if j is None:
        j = constrained.fixed[0]
    if psi0 is None:
        psi0 = constrained.fixed[1]
    return int(j), float(psi0)


def likelihood_root(full: ModelFit, constrained: ModelFit, psi0=None, j=None) -> float:
    """Signed root of twice the log-likelihood drop."""
    j, psi0 = _pinned(constrained, j, psi0)
    dev = 2.0 * (full.loglik - constrained.loglik)
    if dev < -1e-10 * max(1.0, abs(full.loglik)):
        raise DomainError(f"constrained fit has higher log-likelihood than the full fit (deviance {dev:.3g})")
    diff = full.estimates[j] - psi0
    if diff == 0.0 or dev <= 0.0:
        return 0.0
    return math.copysign(math.sqrt(dev), diff)


def _logdet_pd(mat, what):
    sign, ld = np.linalg.slogdet(mat)
    if sign <= 0:
        raise DomainError(f"{what} is not positive definite")
    return float(ld)


def _q_information(full, constrained, j, psi0):
    J = full.observed_info
    try:
        var = np.linalg.inv(J)[j, j]
    except np.linalg.LinAlgError:
        raise DomainError("observed information at the full fit is singular") from None
    if not var > 0:
        raise DomainError("observed information at the full fit is not positive definite")
    ld_full = full.nuisance_logdet(j)
    ld_con = constrained.nuisance_logdet(j)
    return (full.estimates[j] - psi0) / math.sqrt(var) * math.exp(0.5 * (ld_full - ld_con))


def _q_ancillary(full, constrained, j):
    model, data = full.model, full.data
    th_hat, th_0 = full.estimates, constrained.estimates
    phi_hat, jac_hat = model.sample_space_phi(th_hat, data, th_hat)
    phi_0, jac_0 = model.sample_space_phi(th_0, data, th_hat)
    M = jac_0.copy()
    M[:, j] = phi_hat - phi_0
    s1, ld1 = np.linalg.slogdet(M)
    s2, ld2 = np.linalg.slogdet(jac_hat)
    if s1 == 0 or s2 == 0:
        raise DomainError("sample-space derivative matrix is singular")
    ld_j = _logdet_pd(full.observed_info, "observed information at the full fit")
    ld_c = constrained.nuisance_logdet(j)
    return s1 * s2 * math.exp(ld1 - ld2 + 0.5 * (ld_j - ld_c))


def q_factor(full: ModelFit, constrained: ModelFit, psi0=None, j=None, method="auto") -> float:
    """Adjustment ``Q`` of the modified likelihood root."""
    if method not in Q_METHODS:
        raise DomainError(f"method must be one of {Q_METHODS}, got {method!r}")
    j, psi0 = _pinned(constrained, j, psi0)
    if full.estimates[j] == psi0:
        return 0.0
    if method == "auto":
        method = "ancillary" if hasattr(full.model, "sample_space_phi") else "information"
    if method == "ancillary":
        if not hasattr(full.model, "sample_space_phi"):
            raise DomainError(f"model {getattr(full.model, 'name', full.model)!r} has no sample-space derivative")
        return _q_ancillary(full, constrained, j)
    return _q_information(full, constrained, j, psi0)


def _correction(full, constrained, j, psi0, method):
    r = likelihood_root(full, constrained, psi0, j)
    q = q_factor(full, constrained, psi0, j, method)
    if r == 0.0 or q / r <= 0.0:
        return r, q, None
    return r, q, math.log(q / r) / r


def _pvalue(r_star, sided, upper):
    if sided is Sidedness.TWO_SIDED:
        return float(min(1.0, 2.0 * normal_sf(abs(r_star))))
    return float(normal_sf(r_star) if upper else normal_cdf(r_star))


def rstar_pvalue(full: ModelFit, constrained: ModelFit, psi0=None, j=None, sided="two_sided",
                 upper=False, q_method="auto", patch_radius=PATCH_RADIUS) -> RStarResult:
    """p-value from the normal approximation to ``r*``.

    One-sided p-values are ``Phi(r*)`` (small when ``psi_hat`` is well below
    ``psi0``), or ``1 - Phi(r*)`` with ``upper``.  When ``Q`` and ``r`` have
    opposite signs the result falls back to ``r`` and sets ``fallback``.
    """
    sided = Sidedness.coerce(sided)
    j, psi0 = _pinned(constrained, j, psi0)
    r, q, corr = _correction(full, constrained, j, psi0, q_method)
    patched = False
    if abs(r) < patch_radius and full.model is not None and full.data is not None:
        patched = True
        J = full.observed_info
        se = math.sqrt(np.linalg.inv(J)[j, j])
        psi_hat = full.estimates[j]
        anchors, corrs = [], []
        for sgn in (-1.0, 1.0):
            a = psi_hat + sgn * patch_radius * se
            con_a = fit_constrained(full.model, full.data, j, a, start=constrained.estimates)
            _, _, c_a = _correction(full, con_a, j, a, q_method)
            anchors.append(a)
            corrs.append(c_a)
        if None in corrs:
            corr = None
        else:
            w = (psi0 - anchors[0]) / (anchors[1] - anchors[0])
            corr = corrs[0] + w * (corrs[1] - corrs[0])
    fallback = corr is None and r != 0.0
    r_star = r if corr is None else r + corr
    return RStarResult(r, q, r_star, _pvalue(r_star, sided, upper), patched, fallback)


def rstar_test(model, data, j, psi0, sided="two_sided", upper=False, q_method="auto") -> RStarResult:
    """Fit both models and return :func:`rstar_pvalue`."""
    full = fit_mle(model, data)
    con = fit_constrained(model, data, j, psi0, start=full.estimates)
    return rstar_pvalue(full, con, psi0, j, sided, upper, q_method)
