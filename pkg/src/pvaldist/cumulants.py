"""Cumulant generating functions and calibration of standardized means.

The standardized statistic is ``S_n = sqrt(n) (Xbar_n - a_n) / b_n`` for iid
observations from a :class:`FamilySpec`.  Per-observation cumulants come from
closed-form CGF derivatives; everything downstream (Edgeworth terms,
saddlepoint, lattice geometry) is derived from them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy import stats

from .errors import DegenerateError, DomainError

__all__ = [
    "FamilySpec",
    "CumulantSet",
    "LatticeSpec",
    "TestStatCalibration",
    "cgf",
    "per_observation_cumulants",
    "calibrate",
    "empirical_cumulants",
    "lattice_span",
]

MAX_CGF_ORDER = 6
FAMILY_KINDS = ("gamma", "normal", "multinomial-share", "bernoulli", "binomial", "tabulated")


@dataclass(frozen=True)
class FamilySpec:
    """Distribution of one observation.

    Use the constructors (:meth:`gamma`, :meth:`multinomial_share`, ...)
    rather than the raw initializer.  Finite families carry their support and
    probabilities explicitly.
    """

    kind: str
    shape: float | None = None
    rate: float | None = None
    mean: float | None = None
    sd: float | None = None
    support: tuple = ()
    probs: tuple = ()

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise DomainError(f"unknown family kind {self.kind!r}; expected one of {FAMILY_KINDS}")
        if self.kind == "gamma":
            if not (self.shape and self.shape > 0 and self.rate and self.rate > 0):
                raise DomainError("gamma family needs shape > 0 and rate > 0")
        elif self.kind == "normal":
            if self.mean is None or not (self.sd and self.sd > 0):
                raise DomainError("normal family needs a mean and sd > 0")
        else:
            p = np.asarray(self.probs, dtype=float)
            x = np.asarray(self.support, dtype=float)
            if p.ndim != 1 or p.shape != x.shape or p.size == 0:
                raise DomainError("support and probs must be equal-length 1-d sequences")
            if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
                raise DomainError(f"probabilities must be >= 0 and sum to 1 (sum={p.sum()!r})")
            if not np.all(np.isfinite(x)) or len(set(x.tolist())) != x.size:
                raise DomainError("support points must be finite and distinct")

    # constructors
    @classmethod
    def gamma(cls, shape, rate):
        return cls("gamma", shape=float(shape), rate=float(rate))

    @classmethod
    def normal(cls, mean, sd):
        return cls("normal", mean=float(mean), sd=float(sd))

    @classmethod
    def multinomial_share(cls, probs):
        """Allele sharing counts on {0, 1, 2}."""
        return cls("multinomial-share", support=(0.0, 1.0, 2.0), probs=tuple(float(v) for v in probs))

    @classmethod
    def bernoulli(cls, p):
        return cls("bernoulli", support=(0.0, 1.0), probs=(1.0 - float(p), float(p)))

    @classmethod
    def binomial(cls, trials, p):
        k = np.arange(int(trials) + 1)
        pmf = stats.binom.pmf(k, int(trials), float(p))
        pmf = pmf / pmf.sum()
        return cls("binomial", support=tuple(k.astype(float)), probs=tuple(pmf))

    @classmethod
    def tabulated(cls, support, probs):
        return cls("tabulated", support=tuple(float(v) for v in support),
                   probs=tuple(float(v) for v in probs))

    @property
    def is_discrete(self):
        return self.kind not in ("gamma", "normal")

    @property
    def strip(self):
        """Open interval of s on which the CGF is finite."""
        if self.kind == "gamma":
            return (-math.inf, self.rate)
        return (-math.inf, math.inf)

    @property
    def hull(self):
        """Open interval of attainable means for the saddlepoint equation."""
        if self.kind == "gamma":
            return (0.0, math.inf)
        if self.kind == "normal":
            return (-math.inf, math.inf)
        x = np.asarray(self.support)[np.asarray(self.probs) > 0]
        return (float(x.min()), float(x.max()))

    def to_dict(self):
        if self.kind == "gamma":
            return {"kind": "gamma", "shape": self.shape, "rate": self.rate}
        if self.kind == "normal":
            return {"kind": "normal", "mean": self.mean, "sd": self.sd}
        if self.kind == "multinomial-share":
            return {"kind": self.kind, "probs": list(self.probs)}
        return {"kind": "tabulated", "support": list(self.support), "probs": list(self.probs)}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.pop("kind", None)
        allowed = {
            "gamma": {"shape", "rate"},
            "normal": {"mean", "sd"},
            "multinomial-share": {"probs"},
            "bernoulli": {"p"},
            "binomial": {"trials", "p"},
            "tabulated": {"support", "probs"},
        }
        if kind not in allowed:
            raise DomainError(f"unknown family kind {kind!r}")
        extra = set(d) - allowed[kind]
        missing = allowed[kind] - set(d)
        if extra or missing:
            raise DomainError(f"family {kind!r}: unexpected fields {sorted(extra)}, "
                              f"missing fields {sorted(missing)}")
        ctor = {"gamma": cls.gamma, "normal": cls.normal,
                "multinomial-share": cls.multinomial_share, "bernoulli": cls.bernoulli,
                "binomial": cls.binomial, "tabulated": cls.tabulated}[kind]
        return ctor(**d)


@dataclass(frozen=True)
class CumulantSet:
    """Mean, standard deviation and standardized cumulants of ``S_n``."""

    mu_n: float
    v_n: float
    rho3: float
    rho4: float
    n: int

    def __post_init__(self):
        if not self.v_n > 0:
            raise DegenerateError(f"v_n must be positive, got {self.v_n}")
        # Pearson: excess kurtosis >= skewness^2 - 2 for any distribution
        if self.rho4 < self.rho3 ** 2 - 2.0 - 1e-9:
            raise DomainError("rho3, rho4 do not form a valid cumulant pair")


@dataclass(frozen=True)
class LatticeSpec:
    """``X_i - m_i`` lives on ``offset + j * span``; ``b_n`` is the scale of S_n."""

    offset: float
    span: float
    b_n: float

    def __post_init__(self):
        if not self.span > 0:
            raise DomainError("lattice span must be positive")
        if not self.b_n > 0:
            raise DomainError("b_n must be positive")


@dataclass(frozen=True)
class TestStatCalibration:
    cumulants: CumulantSet
    a_n: float = 0.0
    b_n: float = 1.0
    lattice: LatticeSpec | None = None
    family: FamilySpec | None = field(default=None, compare=False)

    __test__ = False  # not a pytest class

    @property
    def is_lattice(self):
        return self.lattice is not None

    @classmethod
    def from_moments(cls, mu_n, v_n, rho3=0.0, rho4=0.0, n=1, lattice=None):
        """Calibration given directly in terms of the moments of S_n."""
        return cls(CumulantSet(float(mu_n), float(v_n), float(rho3), float(rho4), int(n)),
                   lattice=lattice)


def _tilted_cumulants(family, s, orders):
    x = np.asarray(family.support, dtype=float)
    p = np.asarray(family.probs, dtype=float)
    keep = p > 0
    x, p = x[keep], p[keep]
    e = s * x
    shift = e.max()
    w = p * np.exp(e - shift)
    tot = w.sum()
    w = w / tot
    out = {}
    if 0 in orders:
        out[0] = math.log(tot) + shift
    m = float(w @ x)
    c = x - m
    mom = {k: float(w @ c ** k) for k in range(2, MAX_CGF_ORDER + 1)}
    out[1] = m
    out[2] = mom[2]
    out[3] = mom[3]
    out[4] = mom[4] - 3 * mom[2] ** 2
    out[5] = mom[5] - 10 * mom[3] * mom[2]
    out[6] = mom[6] - 15 * mom[4] * mom[2] - 10 * mom[3] ** 2 + 30 * mom[2] ** 3
    return out


def cgf(family: FamilySpec, s: float, order: int = 0) -> float:
    """``order``-th derivative of the per-observation CGF at ``s``."""
    if int(order) != order or not 0 <= order <= MAX_CGF_ORDER:
        raise DomainError(f"CGF order must be in 0..{MAX_CGF_ORDER}")
    s = float(s)
    lo, hi = family.strip
    if not (lo < s < hi) or not math.isfinite(s):
        raise DomainError(f"s={s!r} outside the CGF convergence strip ({lo}, {hi})")
    if family.kind == "gamma":
        a, b = family.shape, family.rate
        if order == 0:
            return -a * math.log1p(-s / b)
        return a * math.factorial(order - 1) / (b - s) ** order
    if family.kind == "normal":
        mu, sd = family.mean, family.sd
        return (mu * s + 0.5 * sd * sd * s * s, mu + sd * sd * s, sd * sd, 0.0, 0.0, 0.0, 0.0)[order]
    return _tilted_cumulants(family, s, {order})[order]


def per_observation_cumulants(family: FamilySpec, orders=(1, 2, 3, 4)):
    return tuple(cgf(family, 0.0, k) for k in orders)


def lattice_span(points, tol=1e-9):
    """Largest d such that all ``points`` differ by integer multiples of d.

    Float Euclid with tolerance; raises if the points share no common span.
    """
    x = np.sort(np.asarray(points, dtype=float))
    gaps = np.diff(x)
    if gaps.size == 0:
        raise DegenerateError("a single support point has no lattice span")
    scale = float(gaps.max())

    eps = tol * scale

    def fgcd(a, b):
        while b > eps:
            r = math.fmod(a, b)
            if b - r <= eps:
                r = 0.0
            a, b = b, r
        return a

    d = reduce(fgcd, sorted(gaps.tolist(), reverse=True))
    if d <= 10 * eps:
        raise DomainError("support is discrete but not on a lattice")
    # confirm every point sits on the lattice
    k = (x - x[0]) / d
    if np.max(np.abs(k - np.round(k))) > 1e-6:
        raise DomainError("support is discrete but not on a lattice")
    return d


def calibrate(family: FamilySpec, n: int, a_n: float, b_n: float) -> TestStatCalibration:
    """Moments and lattice geometry of ``S_n = sqrt(n)(Xbar - a_n)/b_n``."""
    n = int(n)
    if n < 1:
        raise DomainError("n must be >= 1")
    if not b_n > 0:
        raise DomainError("b_n must be positive")
    k1, k2, k3, k4 = per_observation_cumulants(family)
    if not k2 > 0:
        raise DegenerateError("per-observation variance is zero")
    mu_n = math.sqrt(n) * (k1 - a_n) / b_n
    v_n = math.sqrt(k2) / b_n
    rho3 = k3 / (k2 ** 1.5 * math.sqrt(n))
    rho4 = k4 / (k2 * k2 * n)
    lattice = None
    if family.is_discrete:
        x = np.asarray(family.support)[np.asarray(family.probs) > 0]
        d = lattice_span(x)
        lattice = LatticeSpec(offset=float((x[0] - k1) % d), span=d, b_n=float(b_n))
    return TestStatCalibration(CumulantSet(mu_n, v_n, rho3, rho4, n), a_n=float(a_n),
                               b_n=float(b_n), lattice=lattice, family=family)


def empirical_cumulants(samples, n=None, a_n=None, b_n=None) -> CumulantSet:
    """k-statistics of per-observation ``samples`` mapped to the CumulantSet of
    the standardized mean of ``n`` observations.

    Defaults: ``n = len(samples)``, ``a_n`` = sample mean and ``b_n`` = sample
    sd, giving mu_n = 0 and v_n = 1.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size < 8:
        raise DomainError("need at least 8 samples")
    if np.ptp(x) == 0:
        raise DegenerateError("samples are constant")
    k1, k2, k3, k4 = (float(stats.kstat(x, r)) for r in (1, 2, 3, 4))
    if not k2 > 0:
        raise DegenerateError("zero sample variance")
    n = x.size if n is None else int(n)
    a_n = k1 if a_n is None else a_n
    b_n = math.sqrt(k2) if b_n is None else b_n
    return CumulantSet(mu_n=math.sqrt(n) * (k1 - a_n) / b_n, v_n=math.sqrt(k2) / b_n,
                       rho3=k3 / (k2 ** 1.5 * math.sqrt(n)), rho4=k4 / (k2 * k2 * n), n=n)
