"""Empirical distribution machinery: sorted samples, rank CCDFs,
binomial-inversion confidence bands and log-binned densities."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .specfun import binom_quantile


@dataclass(frozen=True)
class SortedSample:
    """Immutable ascending sample with a provenance label."""

    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).ravel())
        if v.size == 0:
            raise DomainError("sample must be nonempty")
        if not np.all(np.isfinite(v)):
            raise DomainError("sample values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return int(self.values.size)

    def __len__(self):
        return self.m

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass(frozen=True)
class CcdfCurve:
    """Distinct sample values ``x`` (ascending) and their CCDF ``s = P[X >= x]``."""

    x: np.ndarray
    s: np.ndarray
    convention: str = "upper-count i/m"
    counts: np.ndarray = field(default=None, repr=False)

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.x, self.s])

    def __len__(self):
        return int(self.x.size)


@dataclass(frozen=True)
class CiBand:
    level: float
    lower: np.ndarray
    upper: np.ndarray
    center: np.ndarray


def build_ccdf(sample: SortedSample) -> CcdfCurve:
    """Rank CCDF: each distinct value gets the fraction of observations at or
    above it, so the maximum sits at ``1/m`` rather than zero."""
    v = sample.values
    m = v.size
    x, first, counts = np.unique(v, return_index=True, return_counts=True)
    s = (m - first) / m
    return CcdfCurve(x=x, s=s, counts=counts)


def empirical_ccdf_at(sample: SortedSample, x) -> np.ndarray:
    """Fraction of observations ``>= x`` at arbitrary probe points."""
    v = sample.values
    return (v.size - np.searchsorted(v, np.asarray(x, dtype=float), side="left")) / v.size


def ci_band(curve: CcdfCurve, m: int, level: float = 0.95, model_ccdf=None) -> CiBand:
    """Equal-tailed binomial-inversion band for a CCDF.

    The number of observations at or above ``x`` is Binomial(m, S(x)), so
    the band is that law's ``(1-level)/2`` and ``(1+level)/2`` quantiles
    divided by ``m``.  ``S`` is the fitted model's CCDF when ``model_ccdf``
    is given, otherwise the empirical values of ``curve``.
    """
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    if model_ccdf is None:
        s = np.asarray(curve.s, dtype=float)
    else:
        s = np.clip(np.asarray(model_ccdf(curve.x), dtype=float), 0.0, 1.0)
    lower = binom_quantile((1 - level) / 2, m, s) / m
    upper = binom_quantile((1 + level) / 2, m, s) / m
    return CiBand(level=level, lower=np.asarray(lower, float), upper=np.asarray(upper, float),
                  center=s)


def log_bin_edges(sample: SortedSample, bins_per_decade: int = 10) -> np.ndarray:
    """Geometric bin edges on the ``10**(k/bins_per_decade)`` grid covering the sample."""
    if bins_per_decade < 1:
        raise DomainError("bins_per_decade must be >= 1")
    v = sample.values
    if v[0] <= 0:
        raise DomainError("log binning needs strictly positive values")
    lo = np.floor(np.log10(v[0]) * bins_per_decade)
    hi = np.floor(np.log10(v[-1]) * bins_per_decade) + 1
    edges = 10.0 ** (np.arange(lo, hi + 1) / bins_per_decade)
    # guard against rounding of 10**k pushing an extreme value outside
    edges[-1] = max(edges[-1], v[-1])
    edges[0] = min(edges[0], v[0])
    return edges


def log_binned_pdf(sample: SortedSample, bins_per_decade: int = 10) -> np.ndarray:
    """Histogram density on geometric bins, ``bins_per_decade`` per factor of ten.

    Returns an ``(n_bins, 2)`` array of (geometric bin center, density);
    empty bins are kept with zero density so rows align with
    ``log_bin_edges``.
    """
    edges = log_bin_edges(sample, bins_per_decade)
    v = sample.values
    counts, _ = np.histogram(v, bins=edges)
    density = counts / (v.size * np.diff(edges))
    centers = np.sqrt(edges[:-1] * edges[1:])
    return np.column_stack([centers, density])
