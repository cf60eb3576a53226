"""
AR(p) baseline as a linear Gaussian state-space model.

Coefficients come from least squares on the lagged design matrix; the
Kalman filter in companion form propagates the predictive variance.
The reported distribution is that of the latent AR process; the small
observation variance only conditions the filter.
"""

from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from core.distributions import GaussianForecast
from utils.errors import NumericalError
from utils.logger import get_logger

logger = get_logger("baselines.ar")

OBS_VARIANCE = 1e-6
RIDGE = 1e-8
MIN_INNOVATION_VARIANCE = 1e-12


@dataclass
class ArModel:
    """x_t = sum_j phi_j x_{t-j} + e_t with e_t ~ N(0, innovation_variance)."""
    coefficients: np.ndarray
    innovation_variance: float
    obs_variance: float = OBS_VARIANCE

    def __post_init__(self):
        self.coefficients = np.atleast_1d(np.asarray(self.coefficients, dtype=np.float64))
        if self.coefficients.ndim != 1 or self.order < 1:
            raise ValueError("AR model needs at least one coefficient")
        if self.innovation_variance <= 0 or self.obs_variance < 0:
            raise ValueError("AR variances must be positive")

    @property
    def order(self) -> int:
        return len(self.coefficients)


@dataclass
class KalmanState:
    """Filtered state mean (most recent value first) and covariance."""
    mean: np.ndarray
    cov: np.ndarray


def lagged_design(series: np.ndarray, p: int) -> Tuple[np.ndarray, np.ndarray]:
    """Rows [x_{t-1}, ..., x_{t-p}] with targets x_t for t = p..N-1."""
    x = np.asarray(series, dtype=np.float64)
    n = len(x)
    idx = np.arange(p, n)[:, None] - np.arange(1, p + 1)
    return x[idx], x[p:]


def fit_ar(series, p: int, obs_variance: float = OBS_VARIANCE) -> ArModel:
    """
    Least-squares AR(p) fit without intercept.

    A rank-deficient design falls back to ridge regression with 1e-8 on
    the diagonal. The innovation variance is the mean squared residual.
    """
    x = np.asarray(series, dtype=np.float64)
    if p < 1:
        raise ValueError(f"AR order must be >= 1, got {p}")
    if len(x) <= 10 * p:
        raise ValueError(f"Series of length {len(x)} too short for AR({p}); need more than {10 * p}")
    X, y = lagged_design(x, p)
    phi, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < p:
        logger.warning(f"Singular AR({p}) design (rank {rank}); using ridge fallback")
        phi = np.linalg.solve(X.T @ X + RIDGE * np.eye(p), X.T @ y)
    resid = y - X @ phi
    sigma2 = max(float(np.mean(resid ** 2)), MIN_INNOVATION_VARIANCE)
    return ArModel(phi, sigma2, obs_variance)


def companion(m: ArModel) -> Tuple[np.ndarray, np.ndarray]:
    """Transition matrix F and process noise Q of the companion form."""
    p = m.order
    F = np.zeros((p, p))
    F[0] = m.coefficients
    F[1:, :-1] = np.eye(p - 1)
    Q = np.zeros((p, p))
    Q[0, 0] = m.innovation_variance
    return F, Q


def _check(state: KalmanState, step: int):
    if not (np.all(np.isfinite(state.mean)) and np.all(np.isfinite(state.cov))):
        raise NumericalError(f"Kalman filter produced non-finite values at step {step}")


def kalman_filter(m: ArModel, history) -> KalmanState:
    """
    Filter a history through the companion-form model.

    The state starts exactly at the first p observations (zero covariance);
    each later observation is a predict + update step with H = e_1 and
    observation variance m.obs_variance.
    """
    x = np.asarray(history, dtype=np.float64)
    p = m.order
    if len(x) < p:
        raise ValueError(f"History of length {len(x)} shorter than AR order {p}")
    F, Q = companion(m)
    state = KalmanState(x[:p][::-1].copy(), np.zeros((p, p)))
    for t, y in enumerate(x[p:], start=p):
        mean = F @ state.mean
        cov = F @ state.cov @ F.T + Q
        s = cov[0, 0] + m.obs_variance
        gain = cov[:, 0] / s
        mean = mean + gain * (y - mean[0])
        cov = cov - np.outer(gain, cov[0])
        state = KalmanState(mean, 0.5 * (cov + cov.T))
        _check(state, t)
    return state


def kalman_forecast(m: ArModel, history, P_h: int) -> GaussianForecast:
    """
    Filter over the history, then P_h predict-only steps.

    Returns:
        GaussianForecast with the k-step predictive mean and variance of the
        process value.
    """
    if P_h < 1:
        raise ValueError(f"Horizon must be >= 1, got {P_h}")
    F, Q = companion(m)
    state = kalman_filter(m, history)
    mu = np.empty(P_h)
    var = np.empty(P_h)
    mean, cov = state.mean, state.cov
    for k in range(P_h):
        mean = F @ mean
        cov = F @ cov @ F.T + Q
        cov = 0.5 * (cov + cov.T)
        mu[k] = mean[0]
        var[k] = cov[0, 0]
    _check(KalmanState(mean, cov), len(history) + P_h)
    return GaussianForecast(mu, var)


def one_step_mse(m: ArModel, history, targets) -> float:
    """Mean squared one-step prediction error over `targets`, which follow `history`."""
    full = np.concatenate([np.asarray(history, dtype=np.float64), np.asarray(targets, dtype=np.float64)])
    X, y = lagged_design(full, m.order)
    n = len(targets)
    pred = X[-n:] @ m.coefficients
    return float(np.mean((y[-n:] - pred) ** 2))


def select_ar_order(train, validation, orders: Sequence[int] = (16, 32, 64),
                    obs_variance: float = OBS_VARIANCE) -> Tuple[ArModel, Dict[int, float]]:
    """
    Fit each order on the training split and keep the lowest validation one-step MSE.

    Orders too large for the training length are skipped; ties go to the
    first listed order.
    """
    scores: Dict[int, float] = {}
    models: Dict[int, ArModel] = {}
    for p in orders:
        if len(train) <= 10 * p:
            logger.warning(f"Skipping AR({p}): training split too short")
            continue
        models[p] = fit_ar(train, p, obs_variance)
        scores[p] = one_step_mse(models[p], train, validation)
        logger.info(f"AR({p}) validation one-step MSE {scores[p]:.6g}")
    if not scores:
        raise ValueError(f"No AR order in {list(orders)} fits a training split of length {len(train)}")
    best = min(scores, key=scores.get)
    return models[best], scores


def simulate_ar_trajectories(m: ArModel, history, P_h: int, S: int,
                             rng: np.random.Generator) -> np.ndarray:
    """
    Joint sample paths of the AR process after the history, shape (S, P_h).

    Paths start from the filtered state distribution and add fresh
    innovations at every step.
    """
    if S < 1:
        raise ValueError(f"Need at least one trajectory, got {S}")
    state = kalman_filter(m, history)
    w, V = np.linalg.eigh(state.cov)
    root = V * np.sqrt(np.clip(w, 0.0, None))
    lags = state.mean + rng.standard_normal((S, m.order)) @ root.T
    noise = rng.standard_normal((S, P_h)) * np.sqrt(m.innovation_variance)
    paths = np.empty((S, P_h))
    for k in range(P_h):
        value = lags @ m.coefficients + noise[:, k]
        paths[:, k] = value
        lags = np.concatenate([value[:, None], lags[:, :-1]], axis=1)
    return paths
