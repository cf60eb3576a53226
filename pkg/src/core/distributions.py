"""Per-step predictive distributions over a forecast horizon.

Three families share one interface (`logpdf`, `cdf`, `quantile`, `mean`,
`median`, `sample`): piecewise-uniform categorical densities over a
`BinPartition`, Gaussians, and Gaussian mixtures.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm

from core.ordinal import BinPartition, PROB_FLOOR, stepwise_logpdf

VARIANCE_FLOOR = 1e-8
QUANTILE_TOL = 1e-9


class ForecastDistribution:
    """Common interface; `kind` is 'categorical', 'gaussian' or 'gmm'."""
    kind: str = ""

    @property
    def horizon(self) -> int:
        raise NotImplementedError

    def logpdf(self, truth) -> np.ndarray:
        raise NotImplementedError

    def cdf(self, x) -> np.ndarray:
        raise NotImplementedError

    def quantile(self, alpha: float) -> np.ndarray:
        raise NotImplementedError

    def mean(self) -> np.ndarray:
        raise NotImplementedError

    def median(self) -> np.ndarray:
        return self.quantile(0.5)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Independent per-step draws, shape (n, horizon)."""
        u = rng.random((n, self.horizon))
        return self._inverse_cdf(u)

    def _inverse_cdf(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check_truth(self, truth) -> np.ndarray:
        truth = np.asarray(truth, dtype=np.float64)
        if truth.shape != (self.horizon,):
            raise ValueError(f"Horizon mismatch: truth has {truth.shape[0] if truth.ndim else 0} "
                             f"steps, distribution has {self.horizon}")
        return truth


@dataclass
class CategoricalForecast(ForecastDistribution):
    """Categorical density per step over a partition; probs has shape (P_h, M)."""
    probs: np.ndarray
    partition: BinPartition
    kind = "categorical"

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.probs.ndim != 2 or self.probs.shape[1] != self.partition.bin_count:
            raise ValueError("probs must have shape (horizon, bin_count)")
        if np.any(np.abs(self.probs.sum(axis=1) - 1.0) > 1e-9) or np.any(self.probs < 0):
            raise ValueError("Every categorical step must be a normalised density")

    @property
    def horizon(self) -> int:
        return self.probs.shape[0]

    def logpdf(self, truth) -> np.ndarray:
        return stepwise_logpdf(self._check_truth(truth), self.probs, self.partition)

    def cdf(self, x) -> np.ndarray:
        x = self._check_truth(x)
        p = self.partition
        pos = np.clip((x - p.lower_bound) / p.width, 0.0, p.bin_count)
        j = np.minimum(np.floor(pos).astype(np.int64), p.bin_count - 1)
        frac = pos - j
        cum = np.cumsum(self.probs, axis=1)
        rows = np.arange(self.horizon)
        before = cum[rows, j] - self.probs[rows, j]
        return np.clip(before + self.probs[rows, j] * frac, 0.0, 1.0)

    def _inverse_cdf(self, u: np.ndarray) -> np.ndarray:
        # u has shape (..., horizon); linear interpolation of mass inside a bin
        p = self.partition
        cum = np.cumsum(self.probs, axis=1)
        j = (cum < u[..., None]).sum(axis=-1)
        j = np.minimum(j, p.bin_count - 1)
        rows = np.broadcast_to(np.arange(self.horizon), j.shape)
        mass = self.probs[rows, j]
        before = cum[rows, j] - mass
        frac = np.where(mass > 0, (u - before) / np.where(mass > 0, mass, 1.0), 1.0)
        frac = np.clip(frac, 0.0, 1.0)
        return p.lower_bound + p.width * (j + frac)

    def quantile(self, alpha: float) -> np.ndarray:
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"Quantile level must lie in (0, 1), got {alpha}")
        return self._inverse_cdf(np.full(self.horizon, float(alpha)))

    def mean(self) -> np.ndarray:
        return self.probs @ self.partition.midpoints


@dataclass
class GaussianForecast(ForecastDistribution):
    """Independent Gaussian per step."""
    mu: np.ndarray
    var: np.ndarray
    kind = "gaussian"

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.var = np.asarray(self.var, dtype=np.float64)
        if self.mu.shape != self.var.shape or self.mu.ndim != 1:
            raise ValueError("mu and var must be 1-D arrays of equal length")
        if np.any(self.var <= 0) or not np.all(np.isfinite(self.var)):
            raise ValueError("Gaussian variances must be finite and positive")

    @property
    def horizon(self) -> int:
        return self.mu.shape[0]

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.var)

    def logpdf(self, truth) -> np.ndarray:
        return norm.logpdf(self._check_truth(truth), loc=self.mu, scale=self.std)

    def cdf(self, x) -> np.ndarray:
        return norm.cdf(self._check_truth(x), loc=self.mu, scale=self.std)

    def _inverse_cdf(self, u: np.ndarray) -> np.ndarray:
        return norm.ppf(u, loc=self.mu, scale=self.std)

    def quantile(self, alpha: float) -> np.ndarray:
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"Quantile level must lie in (0, 1), got {alpha}")
        return norm.ppf(alpha, loc=self.mu, scale=self.std)

    def mean(self) -> np.ndarray:
        return self.mu.copy()

    def median(self) -> np.ndarray:
        return self.mu.copy()


@dataclass(frozen=True)
class GmmDensity:
    """One-dimensional Gaussian mixture for a single horizon step."""
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("Mixture weights must be nonnegative and sum to 1")
        if np.any(np.asarray(self.variances) <= 0):
            raise ValueError("Mixture variances must be positive")

    @property
    def n_components(self) -> int:
        return int(np.count_nonzero(np.asarray(self.weights) > 0))


def gmm_logpdf(x, d: GmmDensity) -> float:
    """Log of the mixture density at x, via log-sum-exp."""
    w = np.asarray(d.weights, dtype=np.float64)
    active = w > 0
    comp = norm.logpdf(x, loc=np.asarray(d.means)[active],
                       scale=np.sqrt(np.asarray(d.variances)[active]))
    return float(logsumexp(comp + np.log(w[active])))


@dataclass
class MixtureForecast(ForecastDistribution):
    """Gaussian mixture per step; arrays have shape (P_h, K), unused slots carry weight 0."""
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    kind = "gmm"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.variances = np.asarray(self.variances, dtype=np.float64)
        if not (self.weights.shape == self.means.shape == self.variances.shape) or self.weights.ndim != 2:
            raise ValueError("Mixture arrays must share shape (horizon, K)")
        if np.any(np.abs(self.weights.sum(axis=1) - 1.0) > 1e-9) or np.any(self.weights < 0):
            raise ValueError("Mixture weights must be nonnegative and sum to 1 at every step")
        if np.any(self.variances <= 0):
            raise ValueError("Mixture variances must be positive")

    @classmethod
    def from_steps(cls, steps) -> 'MixtureForecast':
        k = max(len(s.weights) for s in steps)
        shape = (len(steps), k)
        w, m, v = np.zeros(shape), np.zeros(shape), np.ones(shape)
        for t, s in enumerate(steps):
            n = len(s.weights)
            w[t, :n], m[t, :n], v[t, :n] = s.weights, s.means, s.variances
        return cls(w, m, v)

    @property
    def horizon(self) -> int:
        return self.weights.shape[0]

    def step(self, k: int) -> GmmDensity:
        return GmmDensity(self.weights[k], self.means[k], self.variances[k])

    def logpdf(self, truth) -> np.ndarray:
        truth = self._check_truth(truth)
        comp = norm.logpdf(truth[:, None], loc=self.means, scale=np.sqrt(self.variances))
        with np.errstate(divide='ignore'):
            logw = np.log(self.weights)
        return logsumexp(comp + logw, axis=1)

    def _mixture_cdf(self, x: np.ndarray) -> np.ndarray:
        # x has shape (..., horizon)
        z = norm.cdf(x[..., None], loc=self.means, scale=np.sqrt(self.variances))
        return (z * self.weights).sum(axis=-1)

    def cdf(self, x) -> np.ndarray:
        return self._mixture_cdf(self._check_truth(x))

    def _inverse_cdf(self, u: np.ndarray) -> np.ndarray:
        # Vectorised bisection on the mixture CDF.
        sd = np.sqrt(self.variances)
        active = self.weights > 0
        lo = np.where(active, self.means - 40.0 * sd, np.inf).min(axis=1)
        hi = np.where(active, self.means + 40.0 * sd, -np.inf).max(axis=1)
        lo = np.broadcast_to(lo, u.shape).copy()
        hi = np.broadcast_to(hi, u.shape).copy()
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            below = self._mixture_cdf(mid) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.max(hi - lo) < QUANTILE_TOL:
                break
        return 0.5 * (lo + hi)

    def quantile(self, alpha: float) -> np.ndarray:
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"Quantile level must lie in (0, 1), got {alpha}")
        return self._inverse_cdf(np.full(self.horizon, float(alpha)))

    def mean(self) -> np.ndarray:
        return (self.weights * self.means).sum(axis=1)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        cum = np.cumsum(self.weights, axis=1)
        u = rng.random((n, self.horizon))
        comp = np.minimum((cum < u[..., None]).sum(axis=-1), self.weights.shape[1] - 1)
        rows = np.broadcast_to(np.arange(self.horizon), comp.shape)
        z = rng.standard_normal((n, self.horizon))
        return self.means[rows, comp] + np.sqrt(self.variances[rows, comp]) * z


def gaussian_from_samples(samples: np.ndarray, floor: float = VARIANCE_FLOOR) -> GaussianForecast:
    """Per-step Gaussian with sample mean and (population) variance of rows of `samples`."""
    samples = np.asarray(samples, dtype=np.float64)
    mu = samples.mean(axis=0)
    var = ((samples - mu) ** 2).mean(axis=0)
    return GaussianForecast(mu, np.maximum(var, floor))


__all__ = [
    "ForecastDistribution", "CategoricalForecast", "GaussianForecast", "MixtureForecast",
    "GmmDensity", "gmm_logpdf", "gaussian_from_samples", "PROB_FLOOR", "VARIANCE_FLOOR",
]
