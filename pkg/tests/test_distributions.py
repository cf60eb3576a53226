import numpy as np
import pytest
from scipy.stats import norm

from core.distributions import CategoricalForecast, GaussianForecast, GmmDensity, MixtureForecast, \
    gaussian_from_samples, gmm_logpdf
from core.ordinal import BinPartition


def uniform_categorical(horizon=3, m=4):
    return CategoricalForecast(np.full((horizon, m), 1.0 / m), BinPartition(0.0, 4.0, m))


def test_categorical_uniform_quantiles_and_cdf():
    dist = uniform_categorical()
    np.testing.assert_allclose(dist.median(), 2.0)
    np.testing.assert_allclose(dist.quantile(0.25), 1.0)
    np.testing.assert_allclose(dist.cdf(np.array([0.0, 2.0, 4.0])), [0.0, 0.5, 1.0])
    np.testing.assert_allclose(dist.mean(), 2.0)


def test_categorical_rejects_unnormalised_rows():
    with pytest.raises(ValueError):
        CategoricalForecast(np.full((2, 4), 0.3), BinPartition(0.0, 4.0, 4))


def test_categorical_logpdf_horizon_mismatch():
    with pytest.raises(ValueError):
        uniform_categorical().logpdf(np.zeros(2))


def test_categorical_samples_stay_in_range(rng):
    draws = uniform_categorical().sample(500, rng)
    assert draws.shape == (500, 3)
    assert draws.min() >= 0.0 and draws.max() <= 4.0


def test_gaussian_quantile_and_logpdf():
    dist = GaussianForecast(np.array([0.0, 1.0]), np.array([1.0, 4.0]))
    np.testing.assert_allclose(dist.quantile(0.975), [1.959963984540054, 1.0 + 2 * 1.959963984540054])
    np.testing.assert_allclose(dist.logpdf(np.array([0.0, 1.0])),
                               [norm.logpdf(0.0), norm.logpdf(0.0, scale=2.0)])


def test_gaussian_requires_positive_variance():
    with pytest.raises(ValueError):
        GaussianForecast(np.zeros(2), np.array([1.0, 0.0]))


def test_mixture_quantile_inverts_cdf():
    w = np.array([[0.5, 0.5], [0.2, 0.8]])
    mu = np.array([[-5.0, 5.0], [0.0, 1.0]])
    var = np.ones((2, 2))
    dist = MixtureForecast(w, mu, var)
    q = dist.quantile(0.3)
    np.testing.assert_allclose(dist.cdf(q), 0.3, atol=1e-8)
    np.testing.assert_allclose(dist.mean(), [0.0, 0.8])


def test_mixture_from_steps_pads_with_zero_weight():
    steps = [GmmDensity(np.array([1.0]), np.array([0.0]), np.array([1.0])),
             GmmDensity(np.array([0.5, 0.5]), np.array([-1.0, 1.0]), np.array([1.0, 2.0]))]
    dist = MixtureForecast.from_steps(steps)
    assert dist.weights.shape == (2, 2)
    assert dist.step(0).n_components == 1
    assert np.isfinite(dist.logpdf(np.array([0.0, 0.0]))).all()


def test_gmm_logpdf_matches_direct_sum():
    d = GmmDensity(np.array([0.3, 0.7]), np.array([0.0, 2.0]), np.array([1.0, 0.5]))
    direct = 0.3 * norm.pdf(1.0) + 0.7 * norm.pdf(1.0, loc=2.0, scale=np.sqrt(0.5))
    assert gmm_logpdf(1.0, d) == pytest.approx(np.log(direct))


def test_gaussian_from_samples_floors_variance():
    dist = gaussian_from_samples(np.ones((5, 3)))
    np.testing.assert_allclose(dist.var, 1e-8)
