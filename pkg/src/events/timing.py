"""
Event-timing analysis: predicted peak timings from sample trajectories,
ground-truth timings from a quasi-periodic IMF, and KDE scoring.
"""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from baselines.trajectories import TrajectoryEnsemble
from core.distributions import ForecastDistribution
from events.emd import emd_sift
from events.peaks import PeakSet, detect_peaks
from utils.logger import get_logger

logger = get_logger("events")

DENSITY_FLOOR = 1e-300
MIN_BANDWIDTH = 1.0
DOMINANT = "dominant"
_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


@dataclass
class KdeDensity:
    """Gaussian-kernel density over event timings."""
    samples: np.ndarray
    bandwidth: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if len(self.samples) < 1:
            raise ValueError("KDE needs at least one sample")
        if not self.bandwidth > 0:
            raise ValueError(f"Bandwidth must be positive, got {self.bandwidth}")

    def logpdf(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        z = (t[:, None] - self.samples[None, :]) / self.bandwidth
        log_k = -0.5 * z ** 2 - _LOG_SQRT_2PI - np.log(self.bandwidth)
        return logsumexp(log_k, axis=1) - np.log(len(self.samples))

    def pdf(self, t) -> np.ndarray:
        return np.exp(self.logpdf(t))

    def grid(self, horizon: Optional[int] = None, pad: float = 10.0) -> np.ndarray:
        lo = min(0.0, self.samples.min() - pad * self.bandwidth)
        hi = max(float(horizon or 0), self.samples.max() + pad * self.bandwidth)
        return np.linspace(lo, hi, 2001)

    def to_frame(self, grid=None) -> pd.DataFrame:
        """(t, p(t)) pairs for plotting under a fan chart."""
        t = self.grid() if grid is None else np.asarray(grid, dtype=np.float64)
        return pd.DataFrame({"t": t, "density": self.pdf(t)})


def silverman_bandwidth(samples) -> float:
    """0.9 min(std, IQR / 1.34) n^(-1/5), floored at one time step."""
    x = np.asarray(samples, dtype=np.float64)
    q75, q25 = np.percentile(x, [75, 25])
    a = min(np.std(x), (q75 - q25) / 1.34)
    return max(0.9 * a * len(x) ** (-0.2), MIN_BANDWIDTH)


def kde_fit(samples, bandwidth: Union[str, float] = "silverman") -> KdeDensity:
    samples = np.asarray(samples, dtype=np.float64).reshape(-1)
    if len(samples) < 1:
        raise ValueError("KDE needs at least one sample")
    if isinstance(bandwidth, str):
        if bandwidth.lower() != "silverman":
            raise ValueError(f"Unknown bandwidth rule '{bandwidth}', expected 'silverman' or a number")
        h = silverman_bandwidth(samples)
    else:
        if isinstance(bandwidth, bool) or not float(bandwidth) > 0:
            raise ValueError(f"Bandwidth must be a positive number, got {bandwidth!r}")
        h = float(bandwidth)
    return KdeDensity(samples, h)


def timing_nll(true_timings: PeakSet, d: KdeDensity) -> float:
    """-Σ log p(t_true), densities floored at 1e-300."""
    t = true_timings.as_float() if isinstance(true_timings, PeakSet) else np.asarray(true_timings, float)
    if len(t) < 1:
        raise ValueError("No ground-truth event timings to score")
    log_p = np.maximum(d.logpdf(t), np.log(DENSITY_FLOOR))
    return float(-log_p.sum())


def uniform_timing_nll(n_true: int, horizon: int) -> float:
    """Score of a uniform timing density over the horizon: -n log(1 / P_h)."""
    if horizon < 1:
        raise ValueError(f"Horizon must be >= 1, got {horizon}")
    return float(n_true * np.log(horizon))


def dominant_period(x) -> float:
    """Period (samples) of the largest non-constant DFT component."""
    x = np.asarray(x, dtype=np.float64)
    power = np.abs(np.fft.rfft(x - x.mean())) ** 2
    if len(power) < 2 or not np.any(power[1:] > 0):
        return np.inf
    k = 1 + int(np.argmax(power[1:]))
    return len(x) / k


def select_imf(series, imfs, selector: Union[str, int] = DOMINANT) -> int:
    """Index of the IMF carrying the quasi-periodic component."""
    if isinstance(selector, str):
        if selector != DOMINANT:
            raise ValueError(f"Unknown IMF selector '{selector}'")
        target = dominant_period(series)
        gaps = [abs(dominant_period(imf) - target) for imf in imfs]
        return int(np.argmin(gaps))
    index = int(selector)
    if not 0 <= index < len(imfs):
        raise ValueError(f"IMF index {index} out of range for {len(imfs)} IMFs")
    return index


def true_timings(ground_truth, imf_selector: Union[str, int] = DOMINANT, threshold: float = 0.0,
                 min_distance: int = 5, max_imfs: int = 10) -> PeakSet:
    """Peaks of the selected IMF of the ground truth."""
    decomposition = emd_sift(ground_truth, max_imfs=max_imfs)
    index = select_imf(ground_truth, decomposition.imfs, imf_selector)
    logger.debug(f"Ground-truth timings from IMF {index} of {decomposition.n_imfs}")
    return detect_peaks(decomposition.imfs[index], threshold, min_distance)


def trajectory_timings(ens: TrajectoryEnsemble, threshold: float = 0.0, min_distance: int = 5) -> np.ndarray:
    """Peak timings of every trajectory pooled into one sample set."""
    pooled = [detect_peaks(path, threshold, min_distance).indices for path in ens.paths]
    timings = np.concatenate(pooled).astype(np.float64) if pooled else np.empty(0)
    if len(timings) == 0:
        raise ValueError(f"No events predicted in {ens.n_samples} trajectories")
    return timings


def sample_trajectories(dist: ForecastDistribution, n: int, rng: np.random.Generator) -> TrajectoryEnsemble:
    """Independent per-step draws for models without a native ensemble."""
    if n < 1:
        raise ValueError(f"Need at least one trajectory, got {n}")
    return TrajectoryEnsemble(dist.sample(n, rng), origin="sampled")
