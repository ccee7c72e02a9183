"""Likelihood models, maximum-likelihood fitting and classical tests.

Three parametric models share one fitting routine:

* ``GammaKnownShape`` - iid gamma observations with known shape; the single
  parameter is the rate.
* ``LogisticRegression`` - binary response, canonical logit link.
* ``WeibullRegression`` - log-scale linear in the covariates, log-shape as the
  last parameter, no censoring.

Every model exposes ``evaluate(theta, data) -> (loglik, gradient, hessian)``
and ``start(data)``.  ``fit_mle`` and ``fit_constrained`` run a damped Newton
iteration (Levenberg shift on an indefinite Hessian, step halving until the
log-likelihood does not decrease).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from .errors import ConvergenceError, DegenerateError, DomainError, SeparationError
from .edgeworth import Sidedness
from .specialfn import normal_cdf, normal_sf

__all__ = [
    "DataSet",
    "ModelFit",
    "TestResult",
    "GammaKnownShape",
    "LogisticRegression",
    "WeibullRegression",
    "fit_mle",
    "fit_constrained",
    "score_test_glm",
    "wald_test",
    "linkage_tests",
    "read_dataset_csv",
]

GRAD_TOL = 1e-8
MAX_ITER = 200


@dataclass
class DataSet:
    """Response ``y`` and design matrix ``X`` (intercept included as a column)."""

    y: np.ndarray
    X: np.ndarray
    columns: list | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float).ravel()
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        self.X = X
        if X.shape[0] != self.y.size:
            raise DomainError(f"X has {X.shape[0]} rows but y has {self.y.size} entries")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(X))):
            raise DomainError("data contain missing or non-finite values")
        if self.columns is not None and len(self.columns) != X.shape[1]:
            raise DomainError("columns must name every column of X")

    @property
    def n(self):
        return self.y.size


def read_dataset_csv(path, add_intercept=True) -> DataSet:
    """Read a CSV with a header row.  Column ``y`` is the response, every other
    column a covariate; an intercept column is prepended unless disabled."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DomainError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if "y" not in header:
        raise DomainError(f"{path}: no 'y' column in header {header}")
    try:
        body = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise DomainError(f"{path}: {exc}") from None
    body = body.reshape(-1, len(header))
    iy = header.index("y")
    cov = [h for i, h in enumerate(header) if i != iy]
    X = np.delete(body, iy, axis=1)
    if add_intercept:
        X = np.column_stack([np.ones(len(body)), X])
        cov = ["(intercept)"] + cov
    return DataSet(body[:, iy], X, cov)


@dataclass
class ModelFit:
    """Result of a (possibly constrained) maximum-likelihood fit.

    ``observed_info`` is the negative Hessian over all parameters.  For a
    constrained fit ``fixed`` holds the pinned ``(index, value)`` and
    ``nuisance_info_det`` the determinant of the information over the free
    parameters.
    """

    estimates: np.ndarray
    loglik: float
    score: np.ndarray
    observed_info: np.ndarray
    converged: bool
    iterations: int
    model: object = None
    data: DataSet | None = None
    fixed: tuple | None = None
    history: list = field(default_factory=list)

    def nuisance_logdet(self, j):
        """log det of the information with row and column ``j`` removed."""
        block = np.delete(np.delete(self.observed_info, j, 0), j, 1)
        if block.size == 0:
            return 0.0
        sign, ld = np.linalg.slogdet(block)
        if sign <= 0:
            raise DomainError(f"nuisance information block (parameter {j} removed) is not positive definite")
        return float(ld)

    @property
    def nuisance_info_det(self):
        if self.fixed is None:
            return None
        return math.exp(self.nuisance_logdet(self.fixed[0]))


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str

    __test__ = False


def _two_sided(z):
    return float(min(1.0, 2.0 * normal_sf(abs(z))))


# ---------------------------------------------------------------- models

class GammaKnownShape:
    """iid Gamma(shape, rate) with known shape; parameter vector ``[rate]``.

    The log-likelihood omits ``(shape - 1) sum(log x)``, which does not depend
    on the rate and is infinite when a tiny-shape draw underflows to zero.
    """

    name = "gamma"

    def __init__(self, shape):
        if not shape > 0:
            raise DomainError("gamma shape must be positive")
        self.shape = float(shape)

    def n_params(self, data):
        return 1

    def evaluate(self, theta, data):
        b = theta[0]
        x, a, n = data.y, self.shape, data.n
        if b <= 0:
            return -np.inf, np.full(1, np.nan), np.full((1, 1), np.nan)
        sx = x.sum()
        ll = n * (a * math.log(b) - special.gammaln(a)) - b * sx
        return ll, np.array([n * a / b - sx]), np.array([[-n * a / b ** 2]])

    def start(self, data):
        if np.any(data.y < 0) or not data.y.sum() > 0:
            raise DomainError("gamma observations must be non-negative with a positive sum")
        return np.array([self.shape / data.y.mean()])


class LogisticRegression:
    """Logistic regression with canonical link."""

    name = "logistic"

    def n_params(self, data):
        return data.X.shape[1]

    def evaluate(self, theta, data):
        X, y = data.X, data.y
        eta = X @ theta
        p = special.expit(eta)
        ll = float(np.sum(y * eta - np.logaddexp(0.0, eta)))
        g = X.T @ (y - p)
        H = -(X * (p * (1.0 - p))[:, None]).T @ X
        return ll, g, H

    def start(self, data):
        y = data.y
        if not np.all((y == 0) | (y == 1)):
            raise DomainError("logistic response must be 0/1")
        theta = np.zeros(data.X.shape[1])
        ic = _intercept_column(data.X)
        ybar = y.mean()
        if ic is not None and 0 < ybar < 1:
            theta[ic] = math.log(ybar / (1 - ybar))
        return theta

    def check_fit(self, theta, data, free):
        eta = data.X @ theta
        p = special.expit(eta)
        if np.all((p > 1e-10) & (p < 1 - 1e-10)) and np.max(np.abs(eta)) < 15:
            return
        if _is_separated(data.X[:, free], data.y):
            raise SeparationError("data are (quasi-)separated: the maximum likelihood estimate does not exist")


def _intercept_column(X):
    for i in range(X.shape[1]):
        if np.all(X[:, i] == 1.0):
            return i
    return None


def _is_separated(X, y):
    """Linear-programming check for a direction ``d`` with ``s_i x_i'd >= 0`` for
    all i and not all zero, ``s = 2y - 1``: the logistic likelihood then keeps
    increasing along ``d`` and has no maximizer.  A pinned coefficient only
    adds a fixed offset, which does not change the recession directions."""
    if X.shape[1] == 0:
        return False
    s = 2.0 * y - 1.0
    A = s[:, None] * X
    res = optimize.linprog(-A.sum(axis=0), A_ub=-A, b_ub=np.zeros(len(y)),
                           bounds=[(-1.0, 1.0)] * X.shape[1], method="highs")
    if res.status != 0:
        return False
    return -res.fun > 1e-7 * max(1.0, np.abs(A).sum(axis=1).max())


class WeibullRegression:
    """Weibull regression without censoring.

    ``log Y = X beta + W / k`` with ``W`` standard Gumbel-minimum, i.e. scale
    ``exp(X beta)`` and shape ``k = exp(tau)``.  Parameters ``(beta, tau)``.
    """

    name = "weibull"

    def n_params(self, data):
        return data.X.shape[1] + 1

    def evaluate(self, theta, data):
        X, z = data.X, np.log(data.y)
        b, tau = theta[:-1], theta[-1]
        k = math.exp(tau)
        eta = X @ b
        e = z - eta
        with np.errstate(over="ignore", invalid="ignore"):
            w = np.exp(k * e)
            ll = float(np.sum(tau + (k - 1.0) * z - k * eta - w))
            if not np.isfinite(ll):
                p = len(theta)
                return -np.inf, np.full(p, np.nan), np.full((p, p), np.nan)
            gb = X.T @ (k * (w - 1.0))
            gt = np.sum(1.0 + k * e * (1.0 - w))
            Hbb = -(X * (k * k * w)[:, None]).T @ X
            Hbt = X.T @ (k * (w - 1.0) + k * k * e * w)
            Htt = np.sum(k * e * (1.0 - w) - k * k * e * e * w)
        p = len(theta)
        H = np.empty((p, p))
        H[:-1, :-1] = Hbb
        H[:-1, -1] = H[-1, :-1] = Hbt
        H[-1, -1] = Htt
        return ll, np.r_[gb, gt], H

    def start(self, data):
        if np.any(data.y <= 0):
            raise DomainError("Weibull responses must be positive")
        z = np.log(data.y)
        b = np.linalg.lstsq(data.X, z, rcond=None)[0]
        sd = np.std(z - data.X @ b)
        if sd <= 0:
            raise DegenerateError("log responses are exactly collinear with the design")
        sigma = sd * math.sqrt(6.0) / math.pi
        ic = _intercept_column(data.X)
        if ic is not None:
            b[ic] += np.euler_gamma * sigma
        return np.r_[b, -math.log(sigma)]

    def sample_space_phi(self, theta, data, theta_hat):
        """Sample-space derivative ``phi(theta) = V' d loglik / dz`` and its
        Jacobian in ``theta``, where the ancillary directions
        ``V = [X, -(z - X beta_hat)]`` are the residual configuration of the
        location-scale model on ``z = log y``."""
        X, z = data.X, np.log(data.y)
        resid_hat = z - X @ theta_hat[:-1]
        V = np.column_stack([X, -resid_hat])
        b, k = theta[:-1], math.exp(theta[-1])
        e = z - X @ b
        w = np.exp(k * e)
        dz = k * (1.0 - w)
        d_beta = (k * k * w)[:, None] * X
        d_tau = k * (1.0 - w) - k * k * e * w
        return V.T @ dz, V.T @ np.column_stack([d_beta, d_tau])


MODELS = {"gamma": GammaKnownShape, "logistic": LogisticRegression, "weibull": WeibullRegression}


# ---------------------------------------------------------------- fitting

def _maximize(model, data, theta0, free):
    theta = np.array(theta0, dtype=float)
    idx = np.flatnonzero(free)
    ll, g, H = model.evaluate(theta, data)
    if not np.isfinite(ll):
        raise ConvergenceError("log-likelihood is not finite at the starting value", [theta.copy()])
    history = [ll]
    eye = np.eye(idx.size)
    for it in range(1, MAX_ITER + 1):
        gf = g[idx]
        if idx.size == 0 or np.max(np.abs(gf)) <= GRAD_TOL:
            return theta, ll, g, H, True, it - 1, history
        A = -H[np.ix_(idx, idx)]
        lam = 0.0
        scale = max(np.max(np.abs(np.diag(A))), 1e-12)
        while True:
            try:
                np.linalg.cholesky(A + lam * eye)
                break
            except np.linalg.LinAlgError:
                lam = max(10.0 * lam, 1e-8 * scale)
        step = np.linalg.solve(A + lam * eye, gf)
        t = 1.0
        while True:
            cand = theta.copy()
            cand[idx] += t * step
            nll, ng, nH = model.evaluate(cand, data)
            if np.isfinite(nll) and nll >= ll - 1e-12 * max(1.0, abs(ll)):
                break
            t *= 0.5
            if t < 1e-12:
                raise ConvergenceError("line search failed to find an ascent step", history)
        if abs(nll - ll) <= 1e-15 * max(1.0, abs(ll)) and t < 1.0:
            # no further progress at machine precision
            theta, ll, g, H = cand, nll, ng, nH
            history.append(ll)
            return theta, ll, g, H, bool(np.max(np.abs(g[idx])) <= 1e-6), it, history
        theta, ll, g, H = cand, nll, ng, nH
        history.append(ll)
        if hasattr(model, "check_fit") and it % 5 == 0:
            model.check_fit(theta, data, free)
    raise ConvergenceError(f"no convergence after {MAX_ITER} iterations "
                           f"(|grad| = {np.max(np.abs(g[idx])):.3g})", history)


def _finish(model, data, theta0, free, fixed):
    if data.n <= model.n_params(data) - 1:
        raise DomainError("need more observations than parameters")
    if np.linalg.matrix_rank(data.X) < data.X.shape[1]:
        raise DegenerateError("design matrix is rank deficient")
    theta, ll, g, H, conv, it, hist = _maximize(model, data, theta0, free)
    if hasattr(model, "check_fit"):
        model.check_fit(theta, data, free)
    return ModelFit(theta, ll, g, -H, conv, it, model, data, fixed, hist)


def fit_mle(model, data: DataSet) -> ModelFit:
    """Unconstrained maximum-likelihood fit."""
    theta0 = model.start(data)
    return _finish(model, data, theta0, np.ones(theta0.size, bool), None)


def fit_constrained(model, data: DataSet, j: int, psi0: float, start=None) -> ModelFit:
    """Maximize with parameter ``j`` pinned to ``psi0``."""
    theta0 = np.array(model.start(data) if start is None else start, dtype=float)
    if not 0 <= j < theta0.size:
        raise DomainError(f"parameter index {j} out of range 0..{theta0.size - 1}")
    theta0[j] = psi0
    free = np.ones(theta0.size, bool)
    free[j] = False
    ll0, _, _ = model.evaluate(theta0, data)
    if not np.isfinite(ll0):
        raise DomainError(f"log-likelihood is not finite with parameter {j} = {psi0}")
    return _finish(model, data, theta0, free, (j, float(psi0)))


# ---------------------------------------------------------------- tests

def wald_test(model, data: DataSet, j: int, psi0: float, fit: ModelFit | None = None) -> TestResult:
    """``(theta_j - psi0) / se_j`` with the inverse observed information."""
    fit = fit_mle(model, data) if fit is None else fit
    try:
        cov = np.linalg.inv(fit.observed_info)
    except np.linalg.LinAlgError:
        raise DomainError("observed information is singular") from None
    var = cov[j, j]
    if not var > 0:
        raise DomainError("observed information is not positive definite")
    z = (fit.estimates[j] - psi0) / math.sqrt(var)
    return TestResult(float(z), _two_sided(z), "wald")


def score_test_glm(model, data: DataSet, j: int, psi0: float = 0.0,
                   null_fit: ModelFit | None = None) -> TestResult:
    """Score statistic for one coefficient of a canonical-link GLM.

    ``S = sqrt([(X'DX)^-1]_jj) * sum_i x_ij (y_i - mu_i)`` evaluated at the
    constrained fit; the canonical link makes ``a' = 1`` and ``D = W``.
    """
    if not isinstance(model, LogisticRegression):
        raise DomainError("the GLM score test is implemented for logistic regression")
    fit = fit_constrained(model, data, j, psi0) if null_fit is None else null_fit
    X = data.X
    p = special.expit(X @ fit.estimates)
    info = (X * (p * (1 - p))[:, None]).T @ X
    try:
        cjj = np.linalg.inv(info)[j, j]
    except np.linalg.LinAlgError:
        raise DomainError("information at the null fit is singular") from None
    u = float(X[:, j] @ (data.y - p))
    z = math.sqrt(cjj) * u
    return TestResult(z, _two_sided(z), "score")


def linkage_tests(counts, sided="two_sided"):
    """Score and Wald tests of the allele-sharing mean ``E[x] = 1``.

    ``counts = (n0, n1, n2)`` pairs sharing 0, 1, 2 alleles.  The score test
    uses the null variance 0.5, the Wald test the plug-in variance under the
    multinomial MLE.  One-sided p-values are ``Phi(S)``, the convention of
    :mod:`pvaldist.edgeworth`.
    """
    n0, n1, n2 = (int(c) for c in counts)
    if min(n0, n1, n2) < 0:
        raise DomainError("counts must be non-negative")
    n = n0 + n1 + n2
    if n < 2:
        raise DomainError("need at least two pairs")
    dev = (n2 - n0) / n  # xbar - 1
    score = math.sqrt(n) * dev / math.sqrt(0.5)
    var_hat = (n0 + n2) / n - dev * dev
    if var_hat <= 0:
        raise DegenerateError("all pairs fall in one cell: the Wald variance is zero")
    wald = math.sqrt(n) * dev / math.sqrt(var_hat)
    if Sidedness.coerce(sided) is Sidedness.ONE_SIDED:
        return (TestResult(score, float(normal_cdf(score)), "score"),
                TestResult(wald, float(normal_cdf(wald)), "wald"))
    return TestResult(score, _two_sided(score), "score"), TestResult(wald, _two_sided(wald), "wald")
