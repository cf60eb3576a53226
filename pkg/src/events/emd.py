"""Empirical mode decomposition by envelope sifting."""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import argrelextrema

from utils.logger import get_logger

logger = get_logger("events")

MIN_LENGTH = 16
SD_THRESHOLD = 0.3
MAX_SIFTS = 100
N_MIRROR = 2


@dataclass
class EmdResult:
    """Intrinsic mode functions (fastest first) and the final residual."""
    imfs: List[np.ndarray]
    residual: np.ndarray

    @property
    def n_imfs(self) -> int:
        return len(self.imfs)

    def reconstruct(self) -> np.ndarray:
        return np.sum(self.imfs, axis=0) + self.residual if self.imfs else self.residual.copy()


def find_extrema(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Strict interior local maxima and minima."""
    maxima = argrelextrema(x, np.greater)[0]
    minima = argrelextrema(x, np.less)[0]
    return maxima, minima


def zero_crossings(x: np.ndarray) -> int:
    s = np.signbit(x)
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _mirrored_knots(x: np.ndarray, idx: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Extrema plus up to N_MIRROR of them reflected about each end."""
    n = len(x)
    left = idx[:N_MIRROR][::-1]
    right = idx[-N_MIRROR:][::-1]
    t = np.concatenate([-left, idx, 2 * (n - 1) - right]).astype(np.float64)
    v = np.concatenate([x[left], x[idx], x[right]])
    t, keep = np.unique(t, return_index=True)
    return t, v[keep]


def envelope(x: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Natural cubic spline through the given extrema, evaluated at every sample."""
    t, v = _mirrored_knots(x, idx)
    return CubicSpline(t, v, bc_type="natural")(np.arange(len(x), dtype=np.float64))


def sift(x: np.ndarray, sd_threshold: float = SD_THRESHOLD, max_sifts: int = MAX_SIFTS) -> np.ndarray:
    """
    Extract one IMF: subtract the mean of the upper and lower envelopes until
    the normalised squared change drops below sd_threshold or the extrema and
    zero-crossing counts differ by at most one.
    """
    h = x.copy()
    for _ in range(max_sifts):
        maxima, minima = find_extrema(h)
        if len(maxima) < 2 or len(minima) < 2:
            break
        mean = 0.5 * (envelope(h, maxima) + envelope(h, minima))
        h_new = h - mean
        sd = float(np.sum((h - h_new) ** 2) / max(np.sum(h ** 2), np.finfo(float).tiny))
        h = h_new
        maxima, minima = find_extrema(h)
        if sd < sd_threshold or abs(len(maxima) + len(minima) - zero_crossings(h)) <= 1:
            break
    return h


def is_monotone(x: np.ndarray) -> bool:
    d = np.diff(x)
    return bool(np.all(d >= 0) or np.all(d <= 0))


def emd_sift(series, max_imfs: int = 10, sd_threshold: float = SD_THRESHOLD) -> EmdResult:
    """
    Decompose a series into IMFs and a residual that sum back to it.

    Extraction stops when the residual is monotone, has too few extrema for
    envelopes, or max_imfs IMFs have been taken. A series with fewer than 4
    extrema is returned as its own single IMF.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or len(x) < MIN_LENGTH:
        raise ValueError(f"EMD needs a 1-D series of at least {MIN_LENGTH} samples, got shape {x.shape}")
    if max_imfs < 1:
        raise ValueError(f"max_imfs must be >= 1, got {max_imfs}")

    maxima, minima = find_extrema(x)
    if len(maxima) + len(minima) < 4:
        logger.warning(f"Only {len(maxima) + len(minima)} extrema, returning the input as a single IMF")
        return EmdResult([x.copy()], np.zeros_like(x))

    imfs: List[np.ndarray] = []
    residual = x.copy()
    while len(imfs) < max_imfs and not is_monotone(residual):
        maxima, minima = find_extrema(residual)
        if len(maxima) < 2 or len(minima) < 2:
            break
        imf = sift(residual, sd_threshold)
        imfs.append(imf)
        residual = residual - imf
    # exact complement so the parts add back to the input
    residual = x - np.sum(imfs, axis=0) if imfs else x.copy()
    logger.debug(f"EMD extracted {len(imfs)} IMFs from {len(x)} samples")
    return EmdResult(imfs, residual)
