"""
Forecast scoring: point-forecast errors, sequence likelihoods and calibration.

Every metric is lower-is-better.
"""

from dataclasses import dataclass, asdict
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid

from core.distributions import ForecastDistribution

METRIC_NAMES = (
    "mean_smape", "median_smape", "mean_rmse", "median_rmse", "nll", "cnll", "qqdist", "qqdist_250",
)
QQ_GRID = np.round(np.arange(1, 100) / 100.0, 2)
QQDIST_MAX = 1.0 / 3.0


@dataclass
class QuantileSeries:
    """Per-step values of the alpha-quantile over the horizon."""
    alpha: float
    values: np.ndarray


@dataclass
class MetricsReport:
    """All scores of one model on one dataset."""
    model: str
    dataset: str
    mean_smape: float
    median_smape: float
    mean_rmse: float
    median_rmse: float
    nll: float
    cnll: float
    qqdist: float
    qqdist_250: float

    def metrics(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}

    def to_dict(self) -> Dict:
        return asdict(self)


def _pair(truth, forecast) -> Tuple[np.ndarray, np.ndarray]:
    truth = np.asarray(truth, dtype=np.float64)
    forecast = np.asarray(forecast, dtype=np.float64)
    if truth.shape != forecast.shape:
        raise ValueError(f"Length mismatch: truth {truth.shape} vs forecast {forecast.shape}")
    return truth, forecast


def smape(truth, point_forecast) -> float:
    """(2/P_h) Σ |x - x̂| / (|x| + |x̂|); steps with |x| + |x̂| = 0 contribute 0."""
    x, xh = _pair(truth, point_forecast)
    denom = np.abs(x) + np.abs(xh)
    terms = np.divide(np.abs(x - xh), denom, out=np.zeros_like(denom), where=denom > 0)
    return float(2.0 * terms.mean())


def rmse(truth, point_forecast) -> float:
    x, xh = _pair(truth, point_forecast)
    return float(np.sqrt(np.mean((x - xh) ** 2)))


def per_step_nll(truth, dist: ForecastDistribution) -> np.ndarray:
    """Negative log-density of each ground-truth value under its step's density."""
    return -dist.logpdf(truth)


def forecast_nll(truth, dist: ForecastDistribution) -> float:
    return float(per_step_nll(truth, dist).sum())


def cumulative_nll(truth, dist: ForecastDistribution) -> float:
    """Sum of the NLLs of every prefix: Σ_k (P_h - k + 1) nll_k."""
    nll = per_step_nll(truth, dist)
    weights = np.arange(len(nll), 0, -1, dtype=np.float64)
    return float(weights @ nll)


def quantile_series(dist: ForecastDistribution, alpha: float) -> QuantileSeries:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"Quantile level must lie in (0, 1), got {alpha}")
    return QuantileSeries(float(alpha), dist.quantile(alpha))


def qqdist(truth, dist: ForecastDistribution, horizon_cap: Optional[int] = None) -> float:
    """
    Integrated squared calibration gap ∫ (r_α - α)² dα.

    r_α is the fraction of the first `horizon_cap` truth values strictly below
    the α-quantile. The integral uses the trapezoid rule on α = 0.01..0.99,
    with r held constant out to α = 0 and α = 1; the result is capped at 1/3.
    """
    truth = np.asarray(truth, dtype=np.float64)
    if len(truth) != dist.horizon:
        raise ValueError(f"Horizon mismatch: {len(truth)} truth values vs {dist.horizon} steps")
    cap = dist.horizon if horizon_cap is None else int(horizon_cap)
    if not 1 <= cap <= dist.horizon:
        raise ValueError(f"horizon_cap must lie in [1, {dist.horizon}], got {cap}")
    r = np.array([np.mean(truth[:cap] < dist.quantile(a)[:cap]) for a in QQ_GRID])
    alphas = np.concatenate([[0.0], QQ_GRID, [1.0]])
    r = np.concatenate([[r[0]], r, [r[-1]]])
    return float(min(trapezoid((r - alphas) ** 2, alphas), QQDIST_MAX))


def point_forecasts(dist: ForecastDistribution) -> Tuple[np.ndarray, np.ndarray]:
    """Mean and median paths."""
    return dist.mean(), dist.median()


def sample_truth(dist: ForecastDistribution, rng: np.random.Generator) -> np.ndarray:
    """One ground-truth path drawn independently from each step's own density."""
    return dist.sample(1, rng)[0]


def evaluate_forecast(truth, dist: ForecastDistribution, model: str, dataset: str,
                      qq_horizon: int = 250) -> MetricsReport:
    """All metrics of one forecast; the truncated QQDist uses min(qq_horizon, P_h) steps."""
    truth = np.asarray(truth, dtype=np.float64)
    if len(truth) != dist.horizon:
        raise ValueError(f"Horizon mismatch: {len(truth)} truth values vs {dist.horizon} steps")
    mean, median = point_forecasts(dist)
    return MetricsReport(
        model=model,
        dataset=dataset,
        mean_smape=smape(truth, mean),
        median_smape=smape(truth, median),
        mean_rmse=rmse(truth, mean),
        median_rmse=rmse(truth, median),
        nll=forecast_nll(truth, dist),
        cnll=cumulative_nll(truth, dist),
        qqdist=qqdist(truth, dist),
        qqdist_250=qqdist(truth, dist, min(qq_horizon, dist.horizon)),
    )
