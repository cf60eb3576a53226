"""Detrending, standardisation, 70/15/15 splitting and regularising noise."""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from utils.logger import get_logger

logger = get_logger("datagen")

TRAIN_FRACTION = 0.70
VALIDATION_END = 0.85
MIN_SPLIT_LENGTH = 20
ZERO_VARIANCE_RTOL = 1e-10


@dataclass
class TransformRecord:
    """
    Constants of the preprocessing transform.

    z_t = (x_t - (intercept + slope * t) - season[t mod period] - mean) / std,
    where t counts samples from the start of the series the record was fit on.
    """
    intercept: float = 0.0
    slope: float = 0.0
    seasonal_period: Optional[int] = None
    seasonal_profile: Tuple[float, ...] = ()
    mean: float = 0.0
    std: float = 1.0

    def _baseline(self, n: int, start: int) -> np.ndarray:
        t = np.arange(start, start + n, dtype=np.float64)
        base = self.intercept + self.slope * t
        if self.seasonal_period:
            profile = np.asarray(self.seasonal_profile, dtype=np.float64)
            base = base + profile[np.arange(start, start + n) % self.seasonal_period]
        return base + self.mean

    def apply(self, series, start: int = 0) -> np.ndarray:
        """Transform raw values observed at sample positions start, start + 1, ..."""
        x = np.asarray(series, dtype=np.float64)
        return (x - self._baseline(len(x), start)) / self.std

    def inverse(self, values, start: int = 0) -> np.ndarray:
        """Map processed values back to raw units."""
        z = np.asarray(values, dtype=np.float64)
        return z * self.std + self._baseline(len(z), start)

    def to_dict(self) -> dict:
        return {
            "intercept": self.intercept,
            "slope": self.slope,
            "seasonal_period": self.seasonal_period,
            "seasonal_profile": list(self.seasonal_profile),
            "mean": self.mean,
            "std": self.std,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'TransformRecord':
        data = dict(data)
        data["seasonal_profile"] = tuple(float(v) for v in data.get("seasonal_profile") or ())
        return cls(**data)


@dataclass
class DatasetSplit:
    """Contiguous train / validation / test parts in processed units."""
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    transform: TransformRecord
    boundaries: Tuple[int, int]
    raw: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def length(self) -> int:
        return len(self.train) + len(self.validation) + len(self.test)

    def full(self) -> np.ndarray:
        return np.concatenate([self.train, self.validation, self.test])

    def to_dict(self) -> dict:
        return {
            "boundaries": list(self.boundaries),
            "length": self.length,
            "transform": self.transform.to_dict(),
        }


def detrend_standardize(series, seasonal_period: Optional[int] = None,
                        detrend: bool = True) -> Tuple[np.ndarray, TransformRecord]:
    """
    Remove an OLS linear trend and, optionally, a per-phase seasonal mean,
    then centre and scale to unit variance.

    Raises:
        ValueError: fewer than 3 samples, bad period, or zero variance left
            after detrending.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or len(x) < 3:
        raise ValueError(f"Need a 1-D series of at least 3 samples, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("Series contains non-finite values")

    t = np.arange(len(x), dtype=np.float64)
    slope, intercept = np.polyfit(t, x, 1) if detrend else (0.0, 0.0)
    residual = x - (intercept + slope * t)

    profile: Tuple[float, ...] = ()
    if seasonal_period is not None:
        period = int(seasonal_period)
        if not 2 <= period <= len(x) // 2:
            raise ValueError(f"Seasonal period must lie in [2, {len(x) // 2}], got {seasonal_period}")
        phase = np.arange(len(x)) % period
        season = np.bincount(phase, weights=residual, minlength=period) / np.bincount(phase, minlength=period)
        season = season - season.mean()
        residual = residual - season[phase]
        profile = tuple(float(v) for v in season)
        seasonal_period = period

    mean = float(residual.mean())
    std = float(residual.std())
    scale = max(1.0, float(np.max(np.abs(x))))
    if std <= ZERO_VARIANCE_RTOL * scale:
        raise ValueError(f"Series has zero variance after detrending (std={std:.3g})")

    record = TransformRecord(float(intercept), float(slope), seasonal_period, profile, mean, std)
    return (residual - mean) / std, record


def split_boundaries(n: int) -> Tuple[int, int]:
    if n < MIN_SPLIT_LENGTH:
        raise ValueError(f"Series too short to split: {n} < {MIN_SPLIT_LENGTH}")
    return int(np.floor(TRAIN_FRACTION * n)), int(np.floor(VALIDATION_END * n))


def split_70_15_15(series, detrend: bool = False, seasonal_period: Optional[int] = None) -> DatasetSplit:
    """
    Split at floor(0.70 N) and floor(0.85 N). The transform is fit on the
    training part only and applied to every part; by default it only
    standardises.
    """
    x = np.asarray(series, dtype=np.float64)
    b1, b2 = split_boundaries(len(x))
    _, record = detrend_standardize(x[:b1], seasonal_period, detrend=detrend)
    return DatasetSplit(
        train=record.apply(x[:b1]),
        validation=record.apply(x[b1:b2], start=b1),
        test=record.apply(x[b2:], start=b2),
        transform=record,
        boundaries=(b1, b2),
        raw=x,
    )


def prepare_series(raw, seasonal_period: Optional[int] = None) -> DatasetSplit:
    """Full pipeline: split, then detrend and standardise with training constants."""
    split = split_70_15_15(raw, detrend=True, seasonal_period=seasonal_period)
    logger.info(f"Prepared series: {split.length} samples, boundaries {split.boundaries}, "
                f"slope {split.transform.slope:.4g}, std {split.transform.std:.4g}")
    return split


def add_regularizing_noise(series, sigma: float = 1e-3,
                           rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Add i.i.d. N(0, sigma²) noise; used for the direct-regression models only."""
    if sigma < 0:
        raise ValueError(f"Noise sigma must be >= 0, got {sigma}")
    x = np.asarray(series, dtype=np.float64)
    if sigma == 0:
        return x.copy()
    rng = rng if rng is not None else np.random.default_rng(0)
    return x + rng.normal(0.0, sigma, x.shape)
