import numpy as np
import pytest

from baselines.mixture import fit_stepwise_gmm, fit_vb_gmm
from baselines.trajectories import TrajectoryEnsemble, correct_moments


def test_vb_gmm_recovers_two_modes():
    rng = np.random.default_rng(0)
    n = 2000
    side = rng.random(n) < 0.5
    x = np.where(side, rng.normal(-5, 1, n), rng.normal(5, 1, n))
    result = fit_vb_gmm(x, K_max=5)
    d = result.density
    assert len(d.weights) == 2
    order = np.argsort(d.means)
    np.testing.assert_allclose(d.means[order], [-5.0, 5.0], atol=0.3)
    np.testing.assert_allclose(d.weights[order], [0.5, 0.5], atol=0.1)
    assert np.all(d.weights >= 0.05)
    raw = np.sort(result.component_weights)
    assert len(raw) == 5
    assert np.all(raw[:-2] < 0.05)
    assert raw[-2:].sum() > 0.99


def test_vb_gmm_single_gaussian():
    x = np.random.default_rng(1).normal(2.0, 0.5, 500)
    d = fit_vb_gmm(x, K_max=3).density
    mean = float(np.sum(d.weights * d.means))
    var = float(np.sum(d.weights * (d.variances + d.means ** 2))) - mean ** 2
    assert mean == pytest.approx(2.0, abs=0.1)
    assert var == pytest.approx(0.25, rel=0.2)


def test_vb_gmm_elbo_is_recorded():
    x = np.random.default_rng(2).normal(size=200)
    result = fit_vb_gmm(x, K_max=2, max_iter=3)
    assert 1 <= result.n_iter <= 3
    assert np.isfinite(result.elbo)


def test_vb_gmm_elbo_never_decreases():
    rng = np.random.default_rng(5)
    x = np.concatenate([rng.normal(-2.0, 0.7, 300), rng.normal(1.5, 1.2, 500), rng.normal(6.0, 0.5, 200)])
    for K_max in (1, 3, 5):
        trace = np.asarray(fit_vb_gmm(x, K_max=K_max).elbo_trace)
        assert len(trace) >= 2
        assert np.all(np.diff(trace) >= -1e-9 * np.abs(trace[1:]))


def test_vb_gmm_rejects_empty():
    with pytest.raises(ValueError):
        fit_vb_gmm(np.array([]))


def test_stepwise_gmm_horizon():
    paths = np.random.default_rng(3).normal(size=(60, 4))
    dist = fit_stepwise_gmm(TrajectoryEnsemble(paths, "gp"), K_max=2)
    assert dist.horizon == 4
    np.testing.assert_allclose(dist.weights.sum(axis=1), 1.0)


def test_correct_moments_matches_two_pass():
    rng = np.random.default_rng(4)
    paths = rng.normal(size=(100, 1000)) * rng.uniform(0.1, 3.0, 1000) + rng.normal(size=1000)
    dist = correct_moments(TrajectoryEnsemble(paths))
    S = paths.shape[0]
    mu = np.array([sum(paths[:, k]) / S for k in range(1000)])
    var = np.array([sum((paths[:, k] - mu[k]) ** 2) / S for k in range(1000)])
    np.testing.assert_allclose(dist.mu, mu, rtol=1e-13, atol=1e-14)
    np.testing.assert_allclose(dist.var, var, rtol=1e-12)


def test_correct_moments_needs_two_paths():
    with pytest.raises(ValueError):
        correct_moments(TrajectoryEnsemble(np.zeros((1, 3))))


def test_correct_moments_zero_spread_is_valid():
    dist = correct_moments(TrajectoryEnsemble(np.ones((5, 3))))
    assert np.all(dist.var > 0)


def test_ensemble_rejects_non_finite():
    with pytest.raises(ValueError):
        TrajectoryEnsemble(np.array([[0.0, np.nan]]))
    with pytest.raises(ValueError):
        TrajectoryEnsemble(np.zeros((2, 2)), origin="elsewhere")
