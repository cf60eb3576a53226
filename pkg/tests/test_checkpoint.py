import numpy as np
import pytest

from baselines.autoregressive import ArModel, kalman_forecast
from baselines.gaussian_process import GpHyper, GpModel, gp_predict_batch
from core.ordinal import fit_partition
from core.seq2seq import ORDINAL, REGRESSION, Seq2SeqModel, batch_loss, make_windows
from storage.checkpoint import KIND_AR, KIND_GP, KIND_MORDRED, MANIFEST, WEIGHTS, checkpoint_kind, load_ar, \
    load_gp, load_seq2seq, read_checkpoint, save_ar, save_gp, save_seq2seq, write_checkpoint
from utils.errors import ArtifactError


def test_seq2seq_reload_is_bit_exact(tmp_path, sine_series):
    partition = fit_partition(sine_series, 8)
    model = Seq2SeqModel.build(ORDINAL, 5, np.random.default_rng(0), 0.2, partition, lookback=12,
                               handoff_dropout=True)
    save_seq2seq(tmp_path / "ck", model, seed=4, extra={"l2": 1e-6})
    loaded, header = load_seq2seq(tmp_path / "ck")

    assert loaded.mode == ORDINAL and loaded.n_u == 5 and loaded.lookback == 12
    assert loaded.handoff_dropout and loaded.p_drop == 0.2
    assert loaded.partition.bin_count == 8
    assert loaded.partition.lower_bound == partition.lower_bound
    assert header["seed"] == "4" and float(header["l2"]) == 1e-6
    for name, arr in model.params.items():
        np.testing.assert_array_equal(loaded.params[name], arr)

    windows = make_windows(sine_series[:200], 12)
    assert batch_loss(loaded, windows) == pytest.approx(batch_loss(model, windows), abs=1e-12)


def test_regression_model_round_trip(tmp_path):
    model = Seq2SeqModel.build(REGRESSION, 3, np.random.default_rng(1), 0.0, lookback=6)
    save_seq2seq(tmp_path / "reg", model)
    loaded, _ = load_seq2seq(tmp_path / "reg")
    assert loaded.mode == REGRESSION and loaded.partition is None
    np.testing.assert_array_equal(loaded.params["out.W"], model.params["out.W"])


def test_ar_round_trip(tmp_path, rng):
    m = ArModel(np.array([0.5, -0.2, 0.1]), 0.3)
    save_ar(tmp_path / "ar", m)
    loaded, _ = load_ar(tmp_path / "ar")
    history = rng.normal(size=20)
    a, b = kalman_forecast(m, history, 15), kalman_forecast(loaded, history, 15)
    np.testing.assert_array_equal(a.mu, b.mu)
    np.testing.assert_array_equal(a.var, b.var)
    assert checkpoint_kind(tmp_path / "ar") == KIND_AR


def test_gp_round_trip(tmp_path, rng):
    X = rng.normal(size=(30, 4))
    y = np.sin(X.sum(axis=1))
    m = GpModel(GpHyper(1.0, np.ones(4), 1e-3), X, y)
    save_gp(tmp_path / "gp", m)
    loaded, _ = load_gp(tmp_path / "gp")
    queries = rng.normal(size=(5, 4))
    for a, b in zip(gp_predict_batch(m, queries), gp_predict_batch(loaded, queries)):
        np.testing.assert_array_equal(a, b)
    assert checkpoint_kind(tmp_path / "gp") == KIND_GP


def test_wrong_kind_rejected(tmp_path):
    save_ar(tmp_path / "ar", ArModel(np.array([0.5]), 1.0))
    with pytest.raises(ArtifactError):
        load_seq2seq(tmp_path / "ar")
    with pytest.raises(ArtifactError):
        load_gp(tmp_path / "ar")


def test_manifest_layout(tmp_path):
    write_checkpoint(tmp_path, KIND_MORDRED, {"note": "x"}, {"a": np.arange(3.0), "b": np.eye(2)})
    lines = (tmp_path / MANIFEST).read_text().splitlines()
    assert lines[:2] == ["schema_version=1", "kind=mordred"]
    assert "tensor.a=3@0" in lines and "tensor.b=2x2@24" in lines
    assert (tmp_path / WEIGHTS).stat().st_size == 7 * 8
    _, header, tensors = read_checkpoint(tmp_path)
    assert header == {"note": "x"}
    np.testing.assert_array_equal(tensors["b"], np.eye(2))


def test_truncated_weights(tmp_path):
    write_checkpoint(tmp_path, KIND_AR, {}, {"a": np.arange(4.0)})
    (tmp_path / WEIGHTS).write_bytes(b"\x00" * 8)
    with pytest.raises(ArtifactError):
        read_checkpoint(tmp_path)


def test_bad_manifest(tmp_path):
    (tmp_path / MANIFEST).write_text("schema_version=1\nkind=ar\ngarbage\n")
    with pytest.raises(ArtifactError):
        read_checkpoint(tmp_path)
    (tmp_path / MANIFEST).write_text("schema_version=9\nkind=ar\n")
    with pytest.raises(ArtifactError):
        read_checkpoint(tmp_path)


def test_missing_checkpoint(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_checkpoint(tmp_path / "nowhere")


def test_unknown_kind_or_bad_header(tmp_path):
    with pytest.raises(ArtifactError):
        write_checkpoint(tmp_path, "xgboost", {}, {})
    with pytest.raises(ArtifactError):
        write_checkpoint(tmp_path, KIND_AR, {"bad=key": 1}, {})
