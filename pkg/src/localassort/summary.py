"""Confidence-weighted histograms and percentile summaries."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

PERCENTILES = (10, 25, 50, 75, 90)


@dataclass(frozen=True, eq=False)
class WeightedHistogram:
    edges: np.ndarray
    mass: np.ndarray
    mean: float | None = None
    std: float | None = None
    percentiles: dict[int, float] = field(default_factory=dict)
    count: int = 0

    @property
    def empty(self) -> bool:
        return self.count == 0

    def summary(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "std": self.std,
            "percentiles": {f"p{k}": v for k, v in self.percentiles.items()},
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["bin_left", "bin_right", "mass"])
        for lo, hi, m in zip(self.edges[:-1], self.edges[1:], self.mass):
            writer.writerow([repr(float(lo)), repr(float(hi)), repr(float(m))])
        return buf.getvalue()


def weighted_percentile(values, weights, q) -> float:
    """Smallest value whose cumulative normalized weight reaches ``q / 100``."""
    return float(np.percentile(values, q, weights=weights, method="inverted_cdf"))


def weighted_histogram(values, weights=None, bins: int = 50, value_range=(-1.0, 1.0)) -> WeightedHistogram:
    """Histogram whose bin masses are normalized weights.

    The default range [-1, 1] is widened to cover any value outside it so
    that the masses always sum to one. Entries with ``None``/NaN values or
    zero weight are dropped.
    """
    vals = np.array([np.nan if v is None else v for v in values], dtype=np.float64)
    wts = np.ones_like(vals) if weights is None else np.asarray(weights, dtype=np.float64)
    if vals.shape != wts.shape:
        raise ValueError("values and weights differ in length")
    if np.any(wts < 0):
        raise ValueError("weights must be nonnegative")
    keep = ~np.isnan(vals) & (wts > 0)
    vals, wts = vals[keep], wts[keep]
    lo, hi = value_range
    if vals.size:
        lo, hi = min(lo, float(vals.min())), max(hi, float(vals.max()))
    edges = np.linspace(lo, hi, bins + 1)
    if not vals.size:
        return WeightedHistogram(edges=edges, mass=np.zeros(bins))
    mass, _ = np.histogram(vals, bins=edges, weights=wts)
    mass = mass / wts.sum()
    p = wts / wts.sum()
    mean = float(p @ vals)
    std = float(np.sqrt(p @ (vals - mean) ** 2))
    pct = {q: weighted_percentile(vals, wts, q) for q in PERCENTILES}
    return WeightedHistogram(edges, mass, mean, std, pct, int(vals.size))


def summarize_results(results, bins: int = 50) -> WeightedHistogram:
    """Histogram of :class:`LocalMixingResult` values weighted by ``z``."""
    return weighted_histogram([r.r for r in results], [r.z for r in results], bins=bins)
