"""Streaming first/second-moment accumulation for Monte Carlo features.

Per-replicate feature vectors are reduced chunk by chunk: each chunk yields
(count, mean, scatter about the mean), and chunks are merged in chunk-index
order with the standard pairwise combine.  The reduction order is a fixed
function of the chunk layout, never of thread scheduling, so accumulated
results are bit-identical across worker counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Moments:
    """Running (count, mean, M2) for a vector of features, where M2 is the
    matrix of centered second moments sum((x - mean)(x - mean)')."""

    count: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def from_chunk(cls, feats: np.ndarray) -> "Moments":
        if feats.ndim != 2 or feats.shape[0] < 1:
            raise ValueError("feature chunk must be a nonempty 2-D array")
        mean = feats.mean(axis=0)
        centered = feats - mean
        return cls(feats.shape[0], mean, centered.T @ centered)

    def merge(self, other: "Moments") -> "Moments":
        na, nb = self.count, other.count
        total = na + nb
        delta = other.mean - self.mean
        mean = self.mean + delta * (nb / total)
        m2 = self.m2 + other.m2 + np.outer(delta, delta) * (na * nb / total)
        return Moments(total, mean, m2)

    def variance(self) -> np.ndarray:
        """Sample variance of the features (ddof=1); NaN when count < 2."""
        if self.count < 2:
            return np.full_like(self.mean, np.nan)
        return np.diag(self.m2) / (self.count - 1)

    def se_of_mean(self) -> np.ndarray:
        """Standard error of each feature mean."""
        return np.sqrt(self.variance() / self.count)

    def cov_of_mean(self) -> np.ndarray:
        """Covariance matrix of the vector of feature means."""
        if self.count < 2:
            return np.full_like(self.m2, np.nan)
        return self.m2 / ((self.count - 1) * self.count)

    def block(self, start: int, stop: int) -> "Moments":
        """Marginal moments for the feature slice [start, stop)."""
        return Moments(self.count, self.mean[start:stop],
                       self.m2[start:stop, start:stop])


def merge_in_order(parts: list[Moments]) -> Moments:
    if not parts:
        raise ValueError("nothing to merge")
    acc = parts[0]
    for part in parts[1:]:
        acc = acc.merge(part)
    return acc
