import json

import numpy as np
import pandas as pd
import pytest

from baselines.trajectories import TrajectoryEnsemble
from core.distributions import CategoricalForecast, GaussianForecast, MixtureForecast
from core.ordinal import BinPartition
from storage.artifacts import DENSITIES, FORECAST_HEADER, QUANTILES, TRAJECTORIES, TRUTH, ForecastArtifact, \
    list_forecasts, read_dataset, read_forecast, read_series_csv, write_dataset, write_forecast
from utils.errors import ArtifactError


def categorical(rng, horizon=6, M=5):
    probs = rng.dirichlet(np.ones(M), size=horizon)
    return CategoricalForecast(probs, BinPartition(-2.0, 2.0, M))


def test_categorical_forecast_reloads_exactly(tmp_path, rng):
    dist = categorical(rng)
    art = ForecastArtifact("mordred", "lorenz", dist, truth=rng.normal(size=6), seed=3,
                           metadata={"checkpoint": "ck"})
    folder = write_forecast(tmp_path / "f", art)
    for name in (FORECAST_HEADER, DENSITIES, QUANTILES, TRUTH):
        assert (folder / name).exists()
    back = read_forecast(folder)
    np.testing.assert_array_equal(back.distribution.probs, dist.probs)
    np.testing.assert_array_equal(back.truth, art.truth)
    assert back.distribution.partition.bin_count == 5
    assert (back.model, back.dataset, back.seed) == ("mordred", "lorenz", 3)
    assert back.metadata == {"checkpoint": "ck"}
    assert back.trajectories is None


def test_mixture_with_trajectories(tmp_path, rng):
    w = np.tile([0.3, 0.7], (4, 1))
    dist = MixtureForecast(w, rng.normal(size=(4, 2)), rng.uniform(0.1, 1.0, size=(4, 2)))
    paths = TrajectoryEnsemble(rng.normal(size=(3, 4)), origin="gp")
    folder = write_forecast(tmp_path, ForecastArtifact("gp-gmm", "henon", dist, trajectories=paths))
    assert (folder / TRAJECTORIES).exists()
    back = read_forecast(folder)
    np.testing.assert_array_equal(back.distribution.means, dist.means)
    np.testing.assert_array_equal(back.distribution.variances, dist.variances)
    np.testing.assert_array_equal(back.trajectories.paths, paths.paths)
    assert back.trajectories.origin == "gp"
    assert back.truth is None


def test_quantile_file(tmp_path):
    dist = GaussianForecast(np.zeros(3), np.ones(3))
    write_forecast(tmp_path, ForecastArtifact("ar", "sine", dist, quantile_levels=(0.025, 0.5, 0.975)))
    frame = pd.read_csv(tmp_path / QUANTILES)
    assert list(frame.columns) == ["step", "q0.025", "q0.5", "q0.975"]
    np.testing.assert_allclose(frame["q0.975"], 1.959964, atol=1e-6)
    np.testing.assert_array_equal(frame["q0.5"], 0.0)


def test_truth_length_checked(tmp_path):
    dist = GaussianForecast(np.zeros(3), np.ones(3))
    with pytest.raises(ArtifactError):
        write_forecast(tmp_path, ForecastArtifact("ar", "sine", dist, truth=np.zeros(4)))


def test_unsupported_schema(tmp_path):
    dist = GaussianForecast(np.zeros(3), np.ones(3))
    write_forecast(tmp_path, ForecastArtifact("ar", "sine", dist))
    header = json.loads((tmp_path / FORECAST_HEADER).read_text())
    header["schema_version"] = 99
    (tmp_path / FORECAST_HEADER).write_text(json.dumps(header))
    with pytest.raises(ArtifactError):
        read_forecast(tmp_path)


def test_list_forecasts(tmp_path):
    dist = GaussianForecast(np.zeros(2), np.ones(2))
    for model in ("b", "a"):
        write_forecast(tmp_path / "sine" / model, ForecastArtifact(model, "sine", dist))
    assert list_forecasts(tmp_path) == [tmp_path / "sine" / "a", tmp_path / "sine" / "b"]
    with pytest.raises(FileNotFoundError):
        read_forecast(tmp_path / "missing")


def test_dataset_round_trip(tmp_path, rng):
    values = rng.normal(size=50)
    path = write_dataset(tmp_path / "d" / "x.csv", values, {"system": "henon"})
    back, meta = read_dataset(path)
    np.testing.assert_array_equal(back, values)
    assert meta["system"] == "henon" and meta["schema_version"] == 1


def test_single_column_csv(tmp_path):
    path = tmp_path / "plain.csv"
    path.write_text("value\n1.5\n2.5\n-3\n")
    np.testing.assert_array_equal(read_series_csv(path), [1.5, 2.5, -3.0])
    _, meta = read_dataset(path)
    assert meta == {}


def test_non_numeric_csv(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("index,value\n0,1.0\n1,abc\n")
    with pytest.raises(ArtifactError):
        read_series_csv(path)
