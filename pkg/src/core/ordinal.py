"""Quantisation of bounded real series into ordinal symbols.

A `BinPartition` tiles [lower_bound, upper_bound] with M equal-width bins.
Bins are half-open [lo + i*w, lo + (i+1)*w) except the last, which is closed
on the right. Values outside the partition clamp to the edge bins.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class BinPartition:
    """Equal-width partition of the series range into `bin_count` bins."""
    lower_bound: float
    upper_bound: float
    bin_count: int

    def __post_init__(self):
        if not np.isfinite(self.lower_bound) or not np.isfinite(self.upper_bound):
            raise ValueError("Partition bounds must be finite")
        if not self.lower_bound < self.upper_bound:
            raise ValueError(
                f"lower_bound ({self.lower_bound}) must be below upper_bound ({self.upper_bound})"
            )
        if int(self.bin_count) != self.bin_count or self.bin_count < 2:
            raise ValueError(f"bin_count must be an integer >= 2, got {self.bin_count}")

    @property
    def width(self) -> float:
        return (self.upper_bound - self.lower_bound) / self.bin_count

    @property
    def edges(self) -> np.ndarray:
        return self.lower_bound + self.width * np.arange(self.bin_count + 1)

    @property
    def midpoints(self) -> np.ndarray:
        return self.lower_bound + self.width * (np.arange(self.bin_count) + 0.5)

    def encode(self, values) -> np.ndarray:
        """Vectorised `encode` over an array of values."""
        x = np.asarray(values, dtype=np.float64)
        if not np.all(np.isfinite(x)):
            raise ValueError("Cannot encode non-finite values")
        idx = np.floor((x - self.lower_bound) / self.width).astype(np.int64)
        return np.clip(idx, 0, self.bin_count - 1)

    def one_hot(self, values) -> np.ndarray:
        """One-hot rows for each value; shape (..., M)."""
        idx = self.encode(values)
        return np.eye(self.bin_count)[idx]


@dataclass(frozen=True)
class OrdinalSequence:
    """Bin indices of a quantised series together with their partition."""
    indices: np.ndarray
    partition: BinPartition

    def __post_init__(self):
        idx = np.asarray(self.indices)
        if idx.size and (idx.min() < 0 or idx.max() >= self.partition.bin_count):
            raise ValueError("Ordinal indices out of range for the partition")

    def __len__(self) -> int:
        return len(self.indices)

    @classmethod
    def from_series(cls, series, partition: BinPartition) -> 'OrdinalSequence':
        return cls(partition.encode(series), partition)

    def one_hot(self) -> np.ndarray:
        return np.eye(self.partition.bin_count)[np.asarray(self.indices)]

    def decoded(self) -> np.ndarray:
        return self.partition.midpoints[np.asarray(self.indices)]


@dataclass(frozen=True)
class CategoricalDensity:
    """Probability vector over the M bins of a partition."""
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("CategoricalDensity must be a normalised nonnegative vector")


def fit_partition(series: Sequence[float], M: int, pad_fraction: float = 0.05) -> BinPartition:
    """
    Fit an equal-width partition to the range of a series.

    The [min, max] range is widened symmetrically by pad_fraction * range on
    each side. A constant series has no range; it is widened by
    pad_fraction * max(1, |value|) instead, and rejected when pad_fraction is 0.

    Args:
        series: Non-empty finite values.
        M: Number of bins (>= 2).
        pad_fraction: Relative headroom on each side (>= 0).

    Returns:
        BinPartition over the widened range.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.size == 0:
        raise ValueError("Cannot fit a partition to an empty series")
    if not np.all(np.isfinite(x)):
        raise ValueError("Series contains non-finite values")
    if pad_fraction < 0:
        raise ValueError(f"pad_fraction must be >= 0, got {pad_fraction}")

    lo, hi = float(x.min()), float(x.max())
    span = hi - lo
    if span == 0.0:
        if pad_fraction == 0:
            raise ValueError("Constant series has zero range; use pad_fraction > 0")
        pad = pad_fraction * max(1.0, abs(lo))
    else:
        pad = pad_fraction * span
    return BinPartition(lo - pad, hi + pad, int(M))


def encode(x: float, p: BinPartition) -> int:
    """Bin index of a single value (clamped to the edge bins)."""
    if not np.isfinite(x):
        raise ValueError(f"Cannot encode non-finite value {x}")
    return int(p.encode(x))


def decode(i: int, p: BinPartition) -> float:
    """Midpoint of bin `i`."""
    if not 0 <= i < p.bin_count:
        raise ValueError(f"Bin index {i} out of range [0, {p.bin_count})")
    return float(p.midpoints[i])


def piecewise_uniform_logpdf(x: float, d, p: BinPartition) -> float:
    """
    Log-density of `x` under the piecewise-uniform reading of a categorical output.

    Each bin carries uniform density probs[i] / |C_i|; probabilities are
    floored at 1e-12 so the result is always finite.
    """
    probs = d.probs if isinstance(d, CategoricalDensity) else np.asarray(d, dtype=np.float64)
    i = encode(x, p)
    return float(np.log(max(probs[i], PROB_FLOOR) / p.width))


def stepwise_logpdf(truth, probs: np.ndarray, p: BinPartition) -> np.ndarray:
    """Vectorised per-step piecewise-uniform log-densities; probs has shape (P_h, M)."""
    truth = np.asarray(truth, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[0] != truth.shape[0]:
        raise ValueError(
            f"Horizon mismatch: {truth.shape[0]} truth values vs {probs.shape[0]} densities"
        )
    idx = p.encode(truth)
    mass = probs[np.arange(truth.shape[0]), idx]
    return np.log(np.maximum(mass, PROB_FLOOR) / p.width)


def sequence_nll(truth, densities, p: BinPartition) -> float:
    """Negative sequence log-likelihood of `truth` under per-step categorical densities."""
    truth = np.asarray(truth, dtype=np.float64)
    if len(truth) != len(densities):
        raise ValueError(
            f"Length mismatch: {len(truth)} truth values vs {len(densities)} densities"
        )
    probs = np.stack([d.probs if isinstance(d, CategoricalDensity) else np.asarray(d)
                      for d in densities]) if len(densities) else np.zeros((0, p.bin_count))
    return float(-stepwise_logpdf(truth, probs, p).sum())
