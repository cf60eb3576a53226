"""Local-maximum detection with greedy minimum-distance suppression."""

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks


@dataclass
class PeakSet:
    """Ordered time indices of detected local maxima."""
    indices: np.ndarray

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        if np.any(np.diff(self.indices) <= 0):
            raise ValueError("Peak indices must be strictly increasing")

    def __len__(self) -> int:
        return len(self.indices)

    def as_float(self) -> np.ndarray:
        return self.indices.astype(np.float64)


def candidate_peaks(series, threshold: float = 0.0):
    """
    Indices t with x_t above both neighbours and x_t >= threshold. A flat top
    is one candidate reported at its first index.

    Returns:
        (indices, heights)
    """
    x = np.asarray(series, dtype=np.float64)
    if len(x) < 3:
        return np.empty(0, dtype=np.int64), np.empty(0)
    _, props = find_peaks(x, height=threshold, plateau_size=1)
    idx = props["left_edges"].astype(np.int64)
    return idx, x[idx]


def suppress(indices: np.ndarray, heights: np.ndarray, min_distance: int) -> np.ndarray:
    """
    Keep peaks in order of decreasing height (earlier index first on ties),
    dropping any closer than min_distance to one already kept.

    Not find_peaks(distance=): that keeps the later of two equal peaks and
    measures from plateau midpoints rather than the reported first index.
    """
    if min_distance <= 1 or len(indices) < 2:
        return np.sort(indices)
    order = np.lexsort((indices, -heights))
    taken = np.zeros(len(indices), dtype=bool)
    kept = []
    pos = indices
    for j in order:
        if taken[j]:
            continue
        kept.append(pos[j])
        taken |= np.abs(pos - pos[j]) < min_distance
    return np.sort(np.asarray(kept, dtype=np.int64))


def detect_peaks(series, threshold: float = 0.0, min_distance: int = 5) -> PeakSet:
    """
    Detect local maxima.

    Args:
        series: 1-D values, normally in standardised units.
        threshold: minimum height of a peak.
        min_distance: minimum spacing of reported peaks (samples, >= 1).

    Returns:
        PeakSet, possibly empty.
    """
    if min_distance < 1:
        raise ValueError(f"min_distance must be >= 1, got {min_distance}")
    idx, heights = candidate_peaks(series, threshold)
    return PeakSet(suppress(idx, heights, int(min_distance)))
