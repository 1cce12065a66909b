"""Empirical distributions, histograms and Kolmogorov-Smirnov tests.

Critical values are the asymptotic ones, ``sqrt(-ln(level/2)/2)`` scaled
by the effective sample size; reports for fewer than 50 observations carry
a ``small_sample`` flag instead of being refused.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

__all__ = [
    "EmpiricalDistribution",
    "Histogram",
    "KsReport",
    "empirical_cdf",
    "histogram_density",
    "ks_critical_coefficient",
    "ks_one_sample",
    "ks_two_sample",
]

SMALL_SAMPLE = 50


class EmpiricalDistribution:
    """Immutable sorted sample."""

    __slots__ = ("_sorted",)

    def __init__(self, samples):
        arr = np.sort(np.asarray(samples, dtype=float).ravel())
        if arr.size < 1:
            raise ValueError("empirical distribution needs at least one sample")
        if np.any(np.isnan(arr)):
            raise ValueError("samples must not contain NaN")
        arr.setflags(write=False)
        self._sorted = arr

    @property
    def sorted_samples(self) -> np.ndarray:
        return self._sorted

    @property
    def count(self) -> int:
        return int(self._sorted.size)

    def __len__(self) -> int:
        return self.count

    def cdf(self, y):
        out = np.searchsorted(self._sorted, np.asarray(y, dtype=float), side="right") / self.count
        return float(out) if np.ndim(out) == 0 else out


def _as_dist(samples) -> EmpiricalDistribution:
    return samples if isinstance(samples, EmpiricalDistribution) else EmpiricalDistribution(samples)


def empirical_cdf(dist: EmpiricalDistribution, y):
    """Fraction of samples ``<= y`` (right-continuous)."""
    return _as_dist(dist).cdf(y)


@dataclass(frozen=True)
class Histogram:
    centers: np.ndarray
    densities: np.ndarray
    bin_width: float
    out_of_range: float

    def __iter__(self) -> Iterator[tuple[float, float]]:
        return iter(zip(self.centers.tolist(), self.densities.tolist()))

    def __len__(self) -> int:
        return self.centers.size

    @property
    def in_range_fraction(self) -> float:
        return 1.0 - self.out_of_range


def histogram_density(dist: EmpiricalDistribution, bins: int, value_range: tuple[float, float] | None = None) -> Histogram:
    """Density histogram normalized by the full sample count.

    Samples outside ``value_range`` are not folded in; their share is
    reported as ``out_of_range``, so the densities integrate to the
    in-range fraction.
    """
    dist = _as_dist(dist)
    if bins < 1:
        raise ValueError("bins must be >= 1")
    data = dist.sorted_samples
    if value_range is None:
        lo, hi = float(data[0]), float(data[-1])
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
    else:
        lo, hi = map(float, value_range)
        if not hi > lo:
            raise ValueError("histogram range must have hi > lo")
    counts, edges = np.histogram(data, bins=bins, range=(lo, hi))
    width = (hi - lo) / bins
    inside = int(counts.sum())
    return Histogram(
        centers=0.5 * (edges[:-1] + edges[1:]),
        densities=counts / (dist.count * width),
        bin_width=width,
        out_of_range=(dist.count - inside) / dist.count,
    )


def ks_critical_coefficient(level: float) -> float:
    """Asymptotic Kolmogorov quantile: 1.628 at 1%, 1.358 at 5%."""
    if not 0 < level < 1:
        raise ValueError(f"significance level must be in (0, 1), got {level!r}")
    return math.sqrt(-0.5 * math.log(level / 2.0))


@dataclass(frozen=True)
class KsReport:
    statistic: float
    critical_value: float
    level: float
    sizes: tuple[int, ...]
    small_sample: bool = False

    @property
    def passed(self) -> bool:
        return self.statistic < self.critical_value

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "critical_value": self.critical_value,
            "level": self.level,
            "pass": self.passed,
            "sizes": list(self.sizes),
            "small_sample": self.small_sample,
        }


def ks_one_sample(dist: EmpiricalDistribution, cdf: Callable, level: float = 0.01) -> KsReport:
    """Sup distance between the sample's step CDF and ``cdf``.

    ``cdf`` is called once with the sorted sample array.  Both one-sided
    gaps are taken at every order statistic, so the sup is exact.
    """
    dist = _as_dist(dist)
    x = dist.sorted_samples
    n = dist.count
    f = np.asarray(cdf(x), dtype=float)
    if f.shape != x.shape:
        raise ValueError("hypothesized cdf must return one value per sample")
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1) / n)
    stat = float(max(d_plus, d_minus, 0.0))
    crit = ks_critical_coefficient(level) / math.sqrt(n)
    return KsReport(stat, crit, level, (n,), n < SMALL_SAMPLE)


def ks_two_sample(a: EmpiricalDistribution, b: EmpiricalDistribution, level: float = 0.01) -> KsReport:
    a = _as_dist(a)
    b = _as_dist(b)
    xa, xb = a.sorted_samples, b.sorted_samples
    pooled = np.concatenate([xa, xb])
    fa = np.searchsorted(xa, pooled, side="right") / a.count
    fb = np.searchsorted(xb, pooled, side="right") / b.count
    stat = float(np.max(np.abs(fa - fb)))
    na, nb = a.count, b.count
    crit = ks_critical_coefficient(level) * math.sqrt((na + nb) / (na * nb))
    return KsReport(stat, crit, level, (na, nb), min(na, nb) < SMALL_SAMPLE)
