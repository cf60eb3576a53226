import numpy as np
import pytest
from scipy.integrate import trapezoid

from baselines.trajectories import TrajectoryEnsemble
from core.distributions import GaussianForecast
from events.peaks import PeakSet
from events.timing import DENSITY_FLOOR, dominant_period, kde_fit, sample_trajectories, select_imf, \
    silverman_bandwidth, timing_nll, trajectory_timings, true_timings, uniform_timing_nll


def sine(n=400, period=40):
    return np.sin(2 * np.pi * np.arange(n) / period)


def test_kde_integrates_to_one():
    d = kde_fit([10.0, 20.0, 35.0, 36.0], bandwidth=2.0)
    t = np.linspace(-50, 100, 20001)
    assert trapezoid(d.pdf(t), t) == pytest.approx(1.0, abs=1e-3)


def test_kde_silverman_default(rng):
    samples = rng.normal(100.0, 10.0, size=500)
    d = kde_fit(samples)
    assert d.bandwidth == pytest.approx(silverman_bandwidth(samples))
    assert 1.5 < d.bandwidth < 6.0


def test_silverman_floor():
    assert silverman_bandwidth(np.full(20, 7.0)) == 1.0


def test_kde_rejects_bad_bandwidth():
    with pytest.raises(ValueError):
        kde_fit([1.0, 2.0], bandwidth="scott")
    with pytest.raises(ValueError):
        kde_fit([1.0, 2.0], bandwidth=-1.0)
    with pytest.raises(ValueError):
        kde_fit([], bandwidth=1.0)


def test_timing_nll_floor():
    d = kde_fit([0.0], bandwidth=1.0)
    nll = timing_nll(PeakSet([1000]), d)
    assert nll == pytest.approx(-np.log(DENSITY_FLOOR))


def test_timing_nll_sums_over_events():
    d = kde_fit([5.0, 15.0], bandwidth=1.0)
    one = timing_nll(PeakSet([5]), d)
    both = timing_nll(PeakSet([5, 15]), d)
    assert both == pytest.approx(2 * one)
    with pytest.raises(ValueError):
        timing_nll(PeakSet([]), d)


def test_uniform_baseline():
    assert uniform_timing_nll(3, 100) == pytest.approx(3 * np.log(100))
    with pytest.raises(ValueError):
        uniform_timing_nll(3, 0)


def test_dominant_period():
    assert dominant_period(sine()) == pytest.approx(40.0)
    assert dominant_period(np.ones(50)) == np.inf


def test_select_imf_by_index():
    imfs = [sine(), sine(period=100)]
    assert select_imf(sine(period=100), imfs) == 1
    assert select_imf(sine(), imfs, 0) == 0
    with pytest.raises(ValueError):
        select_imf(sine(), imfs, 2)


def test_true_timings_of_sine():
    peaks = true_timings(sine())
    assert len(peaks) == 10
    np.testing.assert_allclose(peaks.indices, 10 + 40 * np.arange(10), atol=1)


def test_sine_timing_density_beats_uniform(rng):
    truth = sine()
    paths = truth + 0.02 * rng.normal(size=(50, len(truth)))
    ens = TrajectoryEnsemble(paths, origin="model")
    density = kde_fit(trajectory_timings(ens), bandwidth=2.0)
    peaks = true_timings(truth)
    assert timing_nll(peaks, density) < uniform_timing_nll(len(peaks), len(truth))


def test_no_predicted_events():
    ens = TrajectoryEnsemble(np.tile(np.arange(30.0), (3, 1)))
    with pytest.raises(ValueError):
        trajectory_timings(ens)


def test_sample_trajectories(rng):
    dist = GaussianForecast(np.zeros(20), np.ones(20))
    ens = sample_trajectories(dist, 7, rng)
    assert ens.paths.shape == (7, 20)
    assert ens.origin == "sampled"
    with pytest.raises(ValueError):
        sample_trajectories(dist, 0, rng)


def test_density_frame():
    d = kde_fit([10.0, 30.0], bandwidth=3.0)
    frame = d.to_frame(d.grid(50))
    assert list(frame.columns) == ["t", "density"]
    assert frame["t"].min() <= 0.0 and frame["t"].max() >= 50.0
