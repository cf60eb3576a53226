import numpy as np
import pytest

from baselines.autoregressive import ArModel, companion, fit_ar, kalman_filter, kalman_forecast, one_step_mse, \
    select_ar_order, simulate_ar_trajectories


def simulate_ar1(phi, sigma2, n, rng):
    x = np.zeros(n)
    for t in range(1, n):
        x[t] = phi * x[t - 1] + rng.normal(0.0, np.sqrt(sigma2))
    return x


def test_kalman_matches_closed_form_ar1(rng):
    phi, sigma2 = 0.8, 0.5
    m = ArModel(np.array([phi]), sigma2, obs_variance=0.0)
    history = rng.normal(size=30)
    dist = kalman_forecast(m, history, 50)
    k = np.arange(1, 51)
    expected_mu = phi ** k * history[-1]
    expected_var = sigma2 * np.array([np.sum(phi ** (2 * np.arange(j))) for j in k])
    np.testing.assert_allclose(dist.mu, expected_mu, atol=1e-10)
    np.testing.assert_allclose(dist.var, expected_var, atol=1e-10)


def test_fit_ar_recovers_coefficient(rng):
    x = simulate_ar1(0.7, 1.0, 5000, rng)
    m = fit_ar(x, 1)
    assert m.coefficients[0] == pytest.approx(0.7, abs=0.04)
    assert m.innovation_variance == pytest.approx(1.0, abs=0.08)


def test_fit_ar_needs_enough_data():
    with pytest.raises(ValueError):
        fit_ar(np.arange(50.0), 5)


def test_fit_ar_rank_deficient_uses_ridge():
    m = fit_ar(np.zeros(200), 3)
    np.testing.assert_allclose(m.coefficients, 0.0)
    assert m.innovation_variance > 0


def test_companion_shape():
    F, Q = companion(ArModel(np.array([0.5, 0.2, 0.1]), 1.0))
    np.testing.assert_array_equal(F[0], [0.5, 0.2, 0.1])
    np.testing.assert_array_equal(F[1:, :2], np.eye(2))
    assert Q[0, 0] == 1.0 and Q.sum() == 1.0


def test_filter_state_tracks_recent_values(rng):
    m = ArModel(np.array([0.5, 0.3]), 1.0)
    history = rng.normal(size=40)
    state = kalman_filter(m, history)
    np.testing.assert_allclose(state.mean, history[::-1][:2], atol=1e-4)


def test_short_history_rejected():
    with pytest.raises(ValueError):
        kalman_filter(ArModel(np.array([0.1, 0.1, 0.1]), 1.0), np.zeros(2))


def test_select_order_prefers_lowest_validation_error(rng, sine_series):
    noisy = sine_series + rng.normal(0, 0.01, len(sine_series))
    model, scores = select_ar_order(noisy[:1500], noisy[1500:], orders=(2, 4, 500))
    assert set(scores) == {2, 4}
    assert scores[model.order] == min(scores.values())
    assert one_step_mse(model, noisy[:1500], noisy[1500:]) == pytest.approx(scores[model.order])


def test_select_order_all_too_long():
    with pytest.raises(ValueError):
        select_ar_order(np.zeros(50), np.zeros(10), orders=(16,))


def test_trajectories_match_forecast_moments(rng):
    m = ArModel(np.array([0.6]), 0.4, obs_variance=0.0)
    history = rng.normal(size=20)
    paths = simulate_ar_trajectories(m, history, 10, 20_000, rng)
    dist = kalman_forecast(m, history, 10)
    assert paths.shape == (20_000, 10)
    np.testing.assert_allclose(paths.mean(axis=0), dist.mu, atol=0.03)
    np.testing.assert_allclose(paths.var(axis=0), dist.var, rtol=0.05)
