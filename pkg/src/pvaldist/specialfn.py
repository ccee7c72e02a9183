"""Standard normal functions, Hermite polynomials and periodic Bernoulli functions.

All functions accept scalars or numpy arrays and return a float for scalar
input.
"""

import math

import numpy as np
from scipy.special import erfc

from .errors import DomainError

__all__ = [
    "normal_pdf",
    "normal_cdf",
    "normal_sf",
    "normal_quantile",
    "hermite",
    "periodic_q",
]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_INV_SQRT_PI = 1.0 / math.sqrt(math.pi)
_SQRT1_2 = math.sqrt(0.5)
_SQRT1_2_LO = -4.833646656726457e-17  # sqrt(1/2) - _SQRT1_2
_SPLIT = 134217729.0  # 2^27 + 1
MAX_HERMITE_ORDER = 6


def _finite(t, name="t"):
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def normal_pdf(t):
    """Standard normal density."""
    x = _finite(t)
    return _out(_INV_SQRT_2PI * np.exp(-0.5 * x * x))


def _split(a):
    c = _SPLIT * a
    hi = c - (c - a)
    return hi, a - hi


def _half_erfc_scaled(x):
    """0.5 erfc(x / sqrt 2).

    The rounding error of x / sqrt 2 is amplified by about x^2 in relative
    terms, so it is recovered exactly (Dekker product) and applied as a
    first-order correction.
    """
    a = x * _SQRT1_2
    xh, xl = _split(x)
    sh, sl = _split(_SQRT1_2)
    err = ((xh * sh - a) + xh * sl + xl * sh) + xl * sl
    delta = err + x * _SQRT1_2_LO
    return 0.5 * erfc(a) - _INV_SQRT_PI * np.exp(-a * a) * delta


def normal_cdf(t):
    """Standard normal CDF, computed through erfc so the lower tail keeps
    full relative precision down to the underflow threshold."""
    x = _finite(t)
    with np.errstate(over="ignore", invalid="ignore"):
        return _out(_half_erfc_scaled(-x))


def normal_sf(t):
    """Upper tail 1 - Phi(t), never formed by subtraction."""
    x = _finite(t)
    with np.errstate(over="ignore", invalid="ignore"):
        return _out(_half_erfc_scaled(x))


# Wichura (1988), algorithm AS 241, PPND16.
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _poly(coef, x):
    acc = np.zeros_like(x) + coef[-1]
    for c in coef[-2::-1]:
        acc = acc * x + c
    return acc


def _as241(p):
    q = p - 0.5
    x = np.empty_like(p)
    central = np.abs(q) <= 0.425
    if np.any(central):
        qc = q[central]
        r = 0.180625 - qc * qc
        x[central] = qc * _poly(_A, r) / _poly(_B, r)
    tail = ~central
    if np.any(tail):
        r = np.sqrt(-np.log(np.minimum(p[tail], 1.0 - p[tail])))
        xt = np.where(r <= 5.0,
                      _poly(_C, r - 1.6) / _poly(_D, r - 1.6),
                      _poly(_E, r - 5.0) / _poly(_F, r - 5.0))
        x[tail] = np.where(q[tail] < 0, -xt, xt)
    return x


def normal_quantile(p):
    """Standard normal quantile Z_p.

    AS 241 rational approximation followed by one Newton step taken on
    whichever tail is smaller, so that p down to 1e-300 stays accurate.
    """
    arr = np.asarray(p, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError("p must lie strictly inside (0, 1)")
    pa = np.atleast_1d(arr)
    x = _as241(pa)
    lower = pa < 0.5
    dens = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    ok = dens > 0
    resid = np.where(lower,
                     0.5 * erfc(-x * _SQRT1_2) - pa,
                     -(0.5 * erfc(x * _SQRT1_2) - (1.0 - pa)))
    x = np.where(ok, x - resid / np.where(ok, dens, 1.0), x)
    return _out(x.reshape(arr.shape))


def hermite(j, t):
    """Probabilists' Hermite polynomial He_j(t), 0 <= j <= 6.

    Uses He_{k+1} = t He_k - k He_{k-1}; the convention is fixed by
    d^j/dt^j phi(t) = (-1)^j He_j(t) phi(t).
    """
    if int(j) != j or not 0 <= j <= MAX_HERMITE_ORDER:
        raise DomainError(f"Hermite order must be an integer in 0..{MAX_HERMITE_ORDER}, got {j}")
    x = _finite(t)
    prev, cur = np.ones_like(x), x
    if j == 0:
        return _out(prev)
    for k in range(1, int(j)):
        prev, cur = cur, x * cur - k * prev
    return _out(cur)


def periodic_q(j, t):
    """Period-1 Bernoulli-type functions used by the lattice correction.

    With u = t - floor(t): Q_1 = u - 1/2 and Q_2 = u^2 - u + 1/6.
    """
    x = _finite(t)
    u = x - np.floor(x)
    u = np.where(u >= 1.0, 0.0, u)  # x - floor(x) rounds up to 1 for tiny negative x
    if j == 1:
        return _out(u - 0.5)
    if j == 2:
        return _out(u * u - u + 1.0 / 6.0)
    raise DomainError(f"periodic_q order must be 1 or 2, got {j}")
