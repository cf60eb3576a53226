"""
Variational-Bayes Gaussian mixtures in one dimension.

Conjugate model: π ~ Dir(α0), λ_k ~ Gam(a0, b0), μ_k | λ_k ~ N(m0, (β0 λ_k)^-1).
Used to summarise each horizon step of a trajectory ensemble.
"""

from dataclasses import dataclass, field
from typing import List, NamedTuple

import numpy as np
from scipy.special import digamma, gammaln, logsumexp, xlogy

from baselines.trajectories import TrajectoryEnsemble
from core.distributions import GmmDensity, MixtureForecast
from utils.logger import get_logger

logger = get_logger("baselines.gmm")

LOG_2PI = np.log(2.0 * np.pi)


class Prior(NamedTuple):
    alpha0: float
    m0: float
    beta0: float
    a0: float
    b0: float


class Posterior(NamedTuple):
    alpha: np.ndarray
    m: np.ndarray
    beta: np.ndarray
    a: np.ndarray
    b: np.ndarray


@dataclass
class VbGmmResult:
    """Pruned mixture, the posterior weights of every component before pruning, and the ELBO trace."""
    density: GmmDensity
    component_weights: np.ndarray = field(default_factory=lambda: np.ones(1))
    elbo_trace: List[float] = field(default_factory=list)
    converged: bool = True
    n_iter: int = 0

    @property
    def elbo(self) -> float:
        return max(self.elbo_trace) if self.elbo_trace else float("nan")


def default_prior(x: np.ndarray, K: int) -> Prior:
    """Symmetric Dirichlet 1/K; Normal-Gamma centred on the data with a data-driven scale."""
    a0 = 0.5
    return Prior(1.0 / K, float(x.mean()), 1.0, a0, a0 * max(float(x.var()), 1e-6))


def _m_step(x: np.ndarray, r: np.ndarray, prior: Prior) -> Posterior:
    Nk = r.sum(axis=0)
    safe = np.where(Nk > 1e-10, Nk, 1.0)
    xbar = np.where(Nk > 1e-10, (r * x[:, None]).sum(axis=0) / safe, prior.m0)
    Sk = np.where(Nk > 1e-10, (r * (x[:, None] - xbar) ** 2).sum(axis=0) / safe, 0.0)
    alpha = prior.alpha0 + Nk
    beta = prior.beta0 + Nk
    m = (prior.beta0 * prior.m0 + Nk * xbar) / beta
    a = prior.a0 + 0.5 * Nk
    b = prior.b0 + 0.5 * (Nk * Sk + prior.beta0 * Nk * (xbar - prior.m0) ** 2 / beta)
    return Posterior(alpha, m, beta, a, b)


def _expectations(q: Posterior):
    e_ln_pi = digamma(q.alpha) - digamma(q.alpha.sum())
    e_ln_lam = digamma(q.a) - np.log(q.b)
    e_lam = q.a / q.b
    return e_ln_pi, e_ln_lam, e_lam


def _e_step(x: np.ndarray, q: Posterior) -> np.ndarray:
    e_ln_pi, e_ln_lam, e_lam = _expectations(q)
    quad = 1.0 / q.beta + e_lam * (x[:, None] - q.m) ** 2
    log_rho = e_ln_pi + 0.5 * e_ln_lam - 0.5 * LOG_2PI - 0.5 * quad
    return np.exp(log_rho - logsumexp(log_rho, axis=1, keepdims=True))


def _log_dirichlet_norm(alpha: np.ndarray) -> float:
    return float(gammaln(alpha.sum()) - gammaln(alpha).sum())


def _elbo(x: np.ndarray, r: np.ndarray, q: Posterior, prior: Prior) -> float:
    """Evidence lower bound of (q(Z) = r, q(π, μ, λ) = q)."""
    K = r.shape[1]
    e_ln_pi, e_ln_lam, e_lam = _expectations(q)
    Nk = r.sum(axis=0)
    safe = np.where(Nk > 1e-10, Nk, 1.0)
    xbar = (r * x[:, None]).sum(axis=0) / safe
    Sk = (r * (x[:, None] - xbar) ** 2).sum(axis=0) / safe

    e_lik = 0.5 * np.sum(Nk * (e_ln_lam - 1.0 / q.beta - e_lam * Sk
                               - e_lam * (xbar - q.m) ** 2 - LOG_2PI))
    e_z = np.sum(r * e_ln_pi)
    e_pi = _log_dirichlet_norm(np.full(K, prior.alpha0)) + (prior.alpha0 - 1.0) * e_ln_pi.sum()
    e_mu_lam = np.sum(0.5 * np.log(prior.beta0 / (2.0 * np.pi)) + 0.5 * e_ln_lam
                      - 0.5 * prior.beta0 / q.beta - 0.5 * prior.beta0 * e_lam * (q.m - prior.m0) ** 2)
    e_mu_lam += np.sum(prior.a0 * np.log(prior.b0) - gammaln(prior.a0)
                       + (prior.a0 - 1.0) * e_ln_lam - prior.b0 * e_lam)
    h_z = np.sum(xlogy(r, r))
    h_pi = np.sum((q.alpha - 1.0) * e_ln_pi) + _log_dirichlet_norm(q.alpha)
    gamma_entropy = q.a - np.log(q.b) + gammaln(q.a) + (1.0 - q.a) * digamma(q.a)
    h_mu_lam = np.sum(0.5 * e_ln_lam + 0.5 * np.log(q.beta / (2.0 * np.pi)) - 0.5 - gamma_entropy)
    return float(e_lik + e_z + e_pi + e_mu_lam - h_z - h_pi - h_mu_lam)


def _quantile_responsibilities(x: np.ndarray, k: int, K: int) -> np.ndarray:
    # hard split of the sorted samples into k equal groups
    ranks = np.argsort(np.argsort(x, kind="stable"), kind="stable")
    groups = np.minimum(ranks * k // len(x), k - 1)
    r = np.zeros((len(x), K))
    r[np.arange(len(x)), groups] = 1.0
    return r


def _run(x: np.ndarray, r: np.ndarray, prior: Prior, max_iter: int, tol: float):
    trace: List[float] = []
    best_q, best_elbo = None, -np.inf
    converged = False
    for it in range(max_iter):
        q = _m_step(x, r, prior)
        elbo = _elbo(x, r, q, prior)
        trace.append(elbo)
        if elbo > best_elbo:
            best_q, best_elbo = q, elbo
        if it > 0 and abs(elbo - trace[-2]) <= tol * max(1.0, abs(elbo)):
            converged = True
            break
        r = _e_step(x, q)
    return best_q, trace, converged


def fit_vb_gmm(samples, K_max: int = 5, max_iter: int = 500, tol: float = 1e-8,
               prune: float = 0.01) -> VbGmmResult:
    """
    Fit a variational mixture with up to K_max components.

    Runs start from quantile splits into 1..K_max groups and the run with
    the highest ELBO is kept (ties go to fewer initial groups). Components
    whose expected weight falls below `prune` are dropped and the remaining
    weights renormalised. Component variances are the posterior b/a.

    Args:
        samples: One-dimensional sample.
        K_max: Maximum number of components.
        max_iter: Iteration cap per run.
        tol: Relative ELBO change that counts as converged.
        prune: Weight threshold for dropping components.

    Returns:
        VbGmmResult; a run that hits max_iter returns its best-ELBO iterate
        and is flagged as not converged.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0 or not np.all(np.isfinite(x)):
        raise ValueError("GMM fit needs a nonempty finite sample")
    if K_max < 1:
        raise ValueError(f"K_max must be >= 1, got {K_max}")
    prior = default_prior(x, K_max)

    best = None
    for k in range(1, min(K_max, x.size) + 1):
        q, trace, converged = _run(x, _quantile_responsibilities(x, k, K_max), prior, max_iter, tol)
        if best is None or max(trace) > max(best[1]):
            best = (q, trace, converged)
    q, trace, converged = best
    if not converged:
        logger.warning(f"VB-GMM did not converge in {max_iter} iterations; using best-ELBO iterate")

    weights = q.alpha / q.alpha.sum()
    keep = weights >= prune
    if not np.any(keep):
        keep = weights == weights.max()
    w = weights[keep] / weights[keep].sum()
    density = GmmDensity(w, q.m[keep], q.b[keep] / q.a[keep])
    return VbGmmResult(density, weights, trace, converged, len(trace))


def fit_stepwise_gmm(ens: TrajectoryEnsemble, K_max: int = 5, max_iter: int = 500,
                     tol: float = 1e-8, prune: float = 0.01) -> MixtureForecast:
    """Independent VB mixture per horizon step of an ensemble."""
    if ens.n_samples < 10 * K_max:
        logger.warning(f"Only {ens.n_samples} trajectories for up to {K_max} mixture components")
    steps = [fit_vb_gmm(ens.paths[:, k], K_max, max_iter, tol, prune).density
             for k in range(ens.horizon)]
    return MixtureForecast.from_steps(steps)
