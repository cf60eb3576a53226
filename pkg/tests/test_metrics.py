import numpy as np
import pytest

from core.distributions import GaussianForecast
from evaluation.metrics import METRIC_NAMES, cumulative_nll, evaluate_forecast, forecast_nll, per_step_nll, \
    qqdist, quantile_series, rmse, sample_truth, smape


def test_smape_fixed_points():
    x = np.array([1.0, -2.0, 3.5])
    assert smape(x, x) == 0.0
    assert smape([1.0], [-1.0]) == pytest.approx(2.0)
    assert smape([0.0, 1.0], [0.0, 1.0]) == 0.0


def test_smape_bounded(rng):
    a, b = rng.normal(size=500), rng.normal(size=500)
    assert 0.0 <= smape(a, b) <= 2.0


def test_rmse_offset():
    x = np.linspace(-1, 1, 20)
    assert rmse(x, x + 0.3) == pytest.approx(0.3)


def test_length_mismatch_rejected():
    with pytest.raises(ValueError):
        smape([1.0, 2.0], [1.0])


def test_cnll_prefix_identity(rng):
    P_h = 40
    dist = GaussianForecast(rng.normal(size=P_h), rng.uniform(0.1, 2.0, P_h))
    truth = rng.normal(size=P_h)
    nll = per_step_nll(truth, dist)
    oracle = 0.0
    for k in range(1, P_h + 1):
        for j in range(k):
            oracle += nll[j]
    assert cumulative_nll(truth, dist) == pytest.approx(oracle, abs=1e-12 * abs(oracle) + 1e-12)
    assert forecast_nll(truth, dist) == pytest.approx(nll.sum())


def test_qqdist_self_sampled_truth_is_calibrated():
    rng = np.random.default_rng(7)
    P_h = 10_000
    dist = GaussianForecast(rng.normal(size=P_h), rng.uniform(0.5, 2.0, P_h))
    assert qqdist(sample_truth(dist, rng), dist) < 1e-3


def test_qqdist_degenerate_cases():
    dist = GaussianForecast(np.zeros(50), np.ones(50))
    assert qqdist(np.full(50, 100.0), dist) == pytest.approx(1 / 3, abs=1e-3)
    assert qqdist(np.full(50, -100.0), dist) == pytest.approx(1 / 3, abs=1e-3)
    assert qqdist(np.full(50, 100.0), dist) <= 1 / 3


def test_qqdist_horizon_cap():
    dist = GaussianForecast(np.zeros(10), np.ones(10))
    truth = np.concatenate([np.full(5, 100.0), np.zeros(5)])
    assert qqdist(truth, dist, 5) == pytest.approx(1 / 3, abs=1e-3)
    with pytest.raises(ValueError):
        qqdist(truth, dist, 11)


def test_quantile_series_level_checked():
    dist = GaussianForecast(np.zeros(3), np.ones(3))
    assert quantile_series(dist, 0.5).values.tolist() == [0.0, 0.0, 0.0]
    with pytest.raises(ValueError):
        quantile_series(dist, 1.0)


def test_evaluate_forecast_report():
    dist = GaussianForecast(np.ones(300), np.full(300, 0.25))
    report = evaluate_forecast(np.ones(300), dist, "ar", "sine")
    assert set(report.metrics()) == set(METRIC_NAMES)
    assert report.mean_smape == 0.0 and report.median_rmse == 0.0
    assert report.nll == pytest.approx(300 * -np.log(1 / np.sqrt(2 * np.pi * 0.25)))
    with pytest.raises(ValueError):
        evaluate_forecast(np.ones(299), dist, "ar", "sine")
