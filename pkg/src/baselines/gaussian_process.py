"""
Autoregressive Gaussian process with a Matérn 5/2 ARD kernel.

The GP maps a window of the last P values to a Gaussian over the next
value. Multi-step forecasts propagate input uncertainty by Monte Carlo:
each trajectory samples a value, slides its window and predicts again.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

from baselines.trajectories import TrajectoryEnsemble
from utils.errors import NumericalError
from utils.logger import get_logger

logger = get_logger("baselines.gp")

SQRT5 = np.sqrt(5.0)
JITTER_LADDER = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)
LOG_BOUND = 14.0


@dataclass
class GpHyper:
    """Signal variance, one lengthscale per input dimension, white-noise variance."""
    signal_variance: float
    lengthscales: np.ndarray
    noise_variance: float

    def __post_init__(self):
        self.lengthscales = np.atleast_1d(np.asarray(self.lengthscales, dtype=np.float64))
        if self.signal_variance <= 0 or self.noise_variance <= 0 or np.any(self.lengthscales <= 0):
            raise ValueError("GP hyperparameters must be positive")

    def to_log(self) -> np.ndarray:
        return np.concatenate([[np.log(self.signal_variance)], np.log(self.lengthscales),
                               [np.log(self.noise_variance)]])

    @classmethod
    def from_log(cls, theta: np.ndarray) -> 'GpHyper':
        theta = np.asarray(theta, dtype=np.float64)
        return cls(float(np.exp(theta[0])), np.exp(theta[1:-1]), float(np.exp(theta[-1])))


@dataclass
class GpModel:
    """Trained GP: hyperparameters, training data and the Cholesky factor of K + σ_n²I."""
    hyper: GpHyper
    X: np.ndarray
    y: np.ndarray
    chol: np.ndarray = field(repr=False, default=None)
    alpha: np.ndarray = field(repr=False, default=None)
    jitter: float = 0.0
    log_marginal_likelihood: float = float("nan")
    initial_log_marginal_likelihood: float = float("nan")

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.chol is None:
            K = matern52_matrix(self.X, self.X, self.hyper) + self.hyper.noise_variance * np.eye(len(self.y))
            self.chol, self.jitter = _cholesky_with_jitter(K)
            self.alpha = cho_solve((self.chol, True), self.y)

    @property
    def lookback(self) -> int:
        return self.X.shape[1]


def _matern_from_r(r: np.ndarray, signal_variance: float) -> np.ndarray:
    return signal_variance * (1.0 + SQRT5 * r + 5.0 * r ** 2 / 3.0) * np.exp(-SQRT5 * r)


def matern52_matrix(A: np.ndarray, B: np.ndarray, hyper: GpHyper) -> np.ndarray:
    """Kernel matrix between the rows of A and B (no noise term)."""
    A = np.atleast_2d(A) / hyper.lengthscales
    B = np.atleast_2d(B) / hyper.lengthscales
    r = np.sqrt(np.maximum(cdist(A, B, "sqeuclidean"), 0.0))
    return _matern_from_r(r, hyper.signal_variance)


def matern52(a, b, hyper: GpHyper) -> float:
    """k(a, b) = σ_f²(1 + √5 r + 5r²/3) exp(-√5 r) with r = ‖(a - b)/ℓ‖."""
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    if a.shape != b.shape:
        raise ValueError(f"Window length mismatch: {a.shape} vs {b.shape}")
    r = float(np.linalg.norm((a - b) / hyper.lengthscales))
    return float(_matern_from_r(np.asarray(r), hyper.signal_variance))


def _cholesky_with_jitter(K: np.ndarray) -> Tuple[np.ndarray, float]:
    n = K.shape[0]
    for jitter in JITTER_LADDER:
        try:
            L = cholesky(K + jitter * np.eye(n), lower=True)
        except np.linalg.LinAlgError:
            continue
        if jitter > 0:
            logger.warning(f"Cholesky needed jitter {jitter:g}")
        return L, jitter
    raise NumericalError(f"Cholesky failed even with jitter {JITTER_LADDER[-1]:g}")


def log_marginal_likelihood(theta: np.ndarray, X: np.ndarray, y: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Log marginal likelihood and its gradient w.r.t. the log-hyperparameters.

    theta = [log σ_f², log ℓ_1..ℓ_P, log σ_n²]. With W = αα^T - K^{-1}, each
    gradient entry is ½ tr(W ∂K/∂θ).
    """
    hyper = GpHyper.from_log(theta)
    n = len(y)
    Xs = X / hyper.lengthscales
    r = np.sqrt(np.maximum(cdist(Xs, Xs, "sqeuclidean"), 0.0))
    Kf = _matern_from_r(r, hyper.signal_variance)
    L, _ = _cholesky_with_jitter(Kf + hyper.noise_variance * np.eye(n))
    alpha = cho_solve((L, True), y)
    value = -0.5 * y @ alpha - np.log(np.diag(L)).sum() - 0.5 * n * np.log(2.0 * np.pi)

    W = np.outer(alpha, alpha) - cho_solve((L, True), np.eye(n))
    grad = np.empty_like(theta)
    grad[0] = 0.5 * np.sum(W * Kf)
    grad[-1] = 0.5 * hyper.noise_variance * np.trace(W)
    # dK/dlog ℓ_d = (5/3) σ_f² (1 + √5 r) exp(-√5 r) (a_d - b_d)² / ℓ_d²
    G = (5.0 / 3.0) * hyper.signal_variance * (1.0 + SQRT5 * r) * np.exp(-SQRT5 * r)
    M = W * G
    row = M.sum(axis=1)
    grad[1:-1] = 0.5 * (2.0 * (X ** 2 * row[:, None]).sum(axis=0)
                        - 2.0 * ((M @ X) * X).sum(axis=0)) / hyper.lengthscales ** 2
    return float(value), grad


def default_hyper(X: np.ndarray, y: np.ndarray) -> GpHyper:
    """Data-driven starting point: signal variance var(y), lengthscales √P·std of each input."""
    P = X.shape[1]
    var = max(float(np.var(y)), 1e-6)
    scale = np.maximum(X.std(axis=0), 1e-3) * np.sqrt(P)
    return GpHyper(var, scale, max(0.01 * var, 1e-6))


def subsample_windows(X: np.ndarray, y: np.ndarray, max_windows: int):
    """Evenly strided subset of at most max_windows rows."""
    n = len(y)
    if n <= max_windows:
        return X, y
    idx = np.unique(np.linspace(0, n - 1, max_windows).round().astype(np.int64))
    return X[idx], y[idx]


def fit_gp(windows, targets, init: Optional[GpHyper] = None, restarts: int = 3,
           rng: Optional[np.random.Generator] = None, max_iter: int = 200,
           max_windows: int = 2000) -> GpModel:
    """
    Maximise the log marginal likelihood over log-hyperparameters.

    L-BFGS-B runs from the initial point and from `restarts` random
    perturbations of it; the best optimum is kept, and the initial point
    itself if no run improves on it.

    Args:
        windows: Training inputs, shape (n, P).
        targets: Next values, shape (n,).
        init: Starting hyperparameters; data-driven defaults when None.
        restarts: Number of perturbed restarts.
        rng: Generator for the perturbations.
        max_iter: Iteration cap per run.
        max_windows: Training rows kept (evenly strided).

    Returns:
        GpModel with its Cholesky factor.
    """
    X = np.asarray(windows, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y) or len(y) == 0:
        raise ValueError("windows must be (n, P) with one target per row")
    X, y = subsample_windows(X, y, max_windows)
    rng = rng if rng is not None else np.random.default_rng(0)
    init = init if init is not None else default_hyper(X, y)

    theta0 = np.clip(init.to_log(), -LOG_BOUND, LOG_BOUND)
    best_theta = theta0
    best_value, _ = log_marginal_likelihood(theta0, X, y)
    initial_value = best_value
    bounds = [(-LOG_BOUND, LOG_BOUND)] * len(theta0)

    def objective(theta):
        try:
            value, grad = log_marginal_likelihood(theta, X, y)
        except NumericalError:
            return 1e20, np.zeros_like(theta)
        return -value, -grad

    starts = [theta0] + [np.clip(theta0 + rng.normal(0.0, 1.0, theta0.shape), -LOG_BOUND, LOG_BOUND)
                         for _ in range(restarts)]
    for k, start in enumerate(starts):
        res = minimize(objective, start, jac=True, method="L-BFGS-B", bounds=bounds,
                       options={"maxiter": max_iter})
        value = -float(res.fun)
        logger.info(f"GP start {k}: log marginal likelihood {value:.4f}")
        if np.isfinite(value) and value > best_value:
            best_value, best_theta = value, res.x

    hyper = GpHyper.from_log(best_theta)
    return GpModel(hyper, X, y, log_marginal_likelihood=best_value,
                   initial_log_marginal_likelihood=initial_value)


def gp_predict_batch(m: GpModel, windows: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance (including σ_n²) for each row of `windows`."""
    W = np.atleast_2d(np.asarray(windows, dtype=np.float64))
    if W.shape[1] != m.lookback:
        raise ValueError(f"Window length {W.shape[1]} does not match lookback {m.lookback}")
    Ks = matern52_matrix(W, m.X, m.hyper)
    mu = Ks @ m.alpha
    v = solve_triangular(m.chol, Ks.T, lower=True)
    prior = m.hyper.signal_variance + m.hyper.noise_variance
    var = prior - np.sum(v ** 2, axis=0)
    return mu, np.clip(var, m.hyper.noise_variance, prior)


def gp_predict(m: GpModel, window) -> Tuple[float, float]:
    mu, var = gp_predict_batch(m, np.asarray(window, dtype=np.float64)[None, :])
    return float(mu[0]), float(var[0])


def gp_mc_trajectories(m: GpModel, seed_window, P_h: int, S_GP: int,
                       rng: np.random.Generator) -> TrajectoryEnsemble:
    """
    Monte-Carlo propagation: predict, sample, slide the window; P_h times.

    Trajectories run as rows of one batch; row s only uses row s of the
    drawn normals, so trajectories are independent.
    """
    if S_GP < 1:
        raise ValueError(f"S_GP must be >= 1, got {S_GP}")
    seed = np.asarray(seed_window, dtype=np.float64)
    if seed.shape != (m.lookback,):
        raise ValueError(f"Seed window must have length {m.lookback}")
    z = rng.standard_normal((S_GP, P_h))
    windows = np.tile(seed, (S_GP, 1))
    paths = np.empty((S_GP, P_h))
    for k in range(P_h):
        mu, var = gp_predict_batch(m, windows)
        paths[:, k] = mu + np.sqrt(var) * z[:, k]
        windows = np.concatenate([windows[:, 1:], paths[:, k:k + 1]], axis=1)
    if not np.all(np.isfinite(paths)):
        raise NumericalError("GP trajectories became non-finite")
    return TrajectoryEnsemble(paths, origin="gp")
