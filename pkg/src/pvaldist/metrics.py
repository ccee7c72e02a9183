"""Empirical summaries of simulated p-values."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .specialfn import normal_quantile

__all__ = ["Shape", "ShapeLabel", "empirical_cdf", "ks_distance", "classify_shape", "classify_shape_cdf", "type1_error", "histogram"]

SHAPE_BINS = 20
MIN_SHAPE_SAMPLES = 1000


class Shape(str, enum.Enum):
    SHAPE1 = "Shape1"  # uniform
    SHAPE2 = "Shape2"  # decreasing, excess mass near 0
    SHAPE3 = "Shape3"  # interior mode
    SHAPE4 = "Shape4"  # increasing, deficit near 0


@dataclass(frozen=True)
class ShapeLabel:
    label: Shape
    low: float
    high: float
    low_se: float
    high_se: float
    mode_bin: int


def _clean(p):
    arr = np.asarray(p, dtype=float).ravel()
    return arr[~np.isnan(arr)]


def empirical_cdf(pvalues, grid):
    """Right-continuous ECDF evaluated at ``grid``."""
    p = np.sort(_clean(pvalues))
    if p.size == 0:
        raise DomainError("empirical_cdf needs at least one value")
    return np.searchsorted(p, np.asarray(grid, dtype=float), side="right") / p.size


def ks_distance(empirical, theoretical):
    """Sup-norm distance between two CDFs tabulated on the same grid."""
    a = np.asarray(empirical, dtype=float)
    b = np.asarray(theoretical, dtype=float)
    if a.shape != b.shape:
        raise DomainError(f"grid mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise DomainError("empty grid")
    return float(np.max(np.abs(a - b)))


def histogram(pvalues, bins=50):
    counts, edges = np.histogram(np.clip(_clean(pvalues), 0.0, 1.0), bins=bins, range=(0.0, 1.0))
    return edges, counts


def classify_shape(pvalues, bins=SHAPE_BINS) -> ShapeLabel:
    """Label the p-value density by its behaviour at both ends.

    Densities of the first and last of ``bins`` equal bins are compared with
    1 using binomial standard errors.  An interior bin exceeding both end
    bins gives Shape3, where the margin is the two-sided 5% normal quantile
    Bonferroni-adjusted over the interior bins (about 3 SE for 20 bins) so
    that the largest of many noisy bins does not fake a mode; both ends
    within 2 SE of 1 give Shape1;
    otherwise the end with the larger density decides (Shape2 low, Shape4
    high).
    """
    p = _clean(pvalues)
    if p.size < MIN_SHAPE_SAMPLES:
        raise DomainError(f"need at least {MIN_SHAPE_SAMPLES} p-values, got {p.size}")
    counts, _ = np.histogram(np.clip(p, 0.0, 1.0), bins=bins, range=(0.0, 1.0))
    return _classify_counts(counts.astype(float), p.size)


def classify_shape_cdf(grid, cdf, n_samples, bins=SHAPE_BINS) -> ShapeLabel:
    """:func:`classify_shape` for a tabulated CDF (e.g. an ECDF written to
    disk).  Bin masses are interpolated linearly with ``F(0) = 0`` and
    ``F(1) = 1``; ``n_samples`` sets the standard errors."""
    g = np.r_[0.0, np.asarray(grid, dtype=float), 1.0]
    F = np.r_[0.0, np.asarray(cdf, dtype=float), 1.0]
    masses = np.diff(np.interp(np.linspace(0.0, 1.0, bins + 1), g, F))
    return _classify_counts(np.clip(masses, 0.0, None) * n_samples, n_samples)


def _classify_counts(counts, N):
    bins = counts.size
    w = 1.0 / bins
    dens = counts / (N * w)
    se = np.sqrt(np.maximum(counts, 1) * np.clip(1.0 - counts / N, 0.0, 1.0)) / (N * w)
    low, high = dens[0], dens[-1]
    interior = np.arange(1, bins - 1)
    mode = int(interior[np.argmax(dens[interior])])
    z = -normal_quantile(0.025 / interior.size)
    gap = lambda a, b: z * math.hypot(se[a], se[b])
    if dens[mode] - low > gap(mode, 0) and dens[mode] - high > gap(mode, bins - 1):
        label = Shape.SHAPE3
    elif abs(low - 1.0) <= 2 * se[0] and abs(high - 1.0) <= 2 * se[-1]:
        label = Shape.SHAPE1
    elif low < high:
        label = Shape.SHAPE4
    else:
        label = Shape.SHAPE2
    return ShapeLabel(label, float(low), float(high), float(se[0]), float(se[-1]), mode)


def type1_error(pvalues, alpha):
    """Rejection rate ``P(p <= alpha)`` and its binomial standard error."""
    p = _clean(pvalues)
    if p.size == 0:
        raise DomainError("type1_error needs at least one value")
    rate = float(np.mean(p <= alpha))
    return rate, math.sqrt(rate * (1.0 - rate) / p.size)
