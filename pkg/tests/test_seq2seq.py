import numpy as np
import pytest

from core.nnet import sample_dropout_masks
from core.ordinal import BinPartition, OrdinalSequence
from core.seq2seq import ORDINAL, REGRESSION, Seq2SeqModel, batch_loss, forecast_ordinal, forecast_regression, \
    loss_and_gradients, make_windows, mc_dropout_forecast
from utils.errors import ConfigError


def numeric_gradient(model, enc, dec, targets, masks, l2, eps=1e-6):
    grads = {}
    for name, arr in model.params.items():
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + eps
            up, _ = loss_and_gradients(model, enc, dec, targets, masks, l2)
            arr[idx] = old - eps
            down, _ = loss_and_gradients(model, enc, dec, targets, masks, l2)
            arr[idx] = old
            g[idx] = (up - down) / (2 * eps)
        grads[name] = g
    return grads


def random_instance(seed):
    rng = np.random.default_rng(seed)
    mode = ORDINAL if seed % 2 == 0 else REGRESSION
    n_u = int(rng.integers(2, 5))
    M = int(rng.integers(3, 6))
    P = int(rng.integers(2, 5))
    L = int(rng.integers(1, 4))
    partition = BinPartition(-1.0, 1.0, M)
    model = Seq2SeqModel.build(mode, n_u, rng, p_drop=0.3, partition=partition, lookback=P,
                               handoff_dropout=bool(seed % 3 == 0))
    series = rng.uniform(-1, 1, P + L + 3)
    w = make_windows(series, P, 1, L)
    masks = sample_dropout_masks(model.dropout, rng, batch=len(w))
    return model, model.features(w.encoder), model.features(w.decoder), model.targets(w.targets), masks


@pytest.mark.parametrize("seed", range(20))
def test_gradients_match_finite_differences(seed):
    model, enc, dec, targets, masks = random_instance(seed)
    _, analytic = loss_and_gradients(model, enc, dec, targets, masks, l2=1e-3)
    numeric = numeric_gradient(model, enc, dec, targets, masks, l2=1e-3)
    for name in model.params:
        np.testing.assert_allclose(analytic[name], numeric[name], rtol=1e-4, atol=1e-7, err_msg=name)


def test_make_windows_shapes():
    w = make_windows(np.arange(10.0), P=3, decoder_length=2)
    assert len(w) == 6
    np.testing.assert_array_equal(w.encoder[0], [0, 1, 2])
    np.testing.assert_array_equal(w.decoder[0], [2, 3])
    np.testing.assert_array_equal(w.targets[0], [3, 4])


def test_make_windows_ordinal_sequence():
    p = BinPartition(0.0, 10.0, 10)
    w = make_windows(OrdinalSequence.from_series(np.arange(10.0) + 0.5, p), P=4)
    assert w.encoder.dtype.kind == "i"
    np.testing.assert_array_equal(w.targets[:, 0], np.arange(4, 10))


def test_make_windows_too_short():
    with pytest.raises(ValueError):
        make_windows(np.arange(3.0), P=3)


def test_ordinal_mode_needs_partition(rng):
    with pytest.raises(ConfigError):
        Seq2SeqModel.build(ORDINAL, 4, rng)


@pytest.fixture
def ordinal_model(rng):
    return Seq2SeqModel.build(ORDINAL, 6, rng, p_drop=0.25, partition=BinPartition(-1.5, 1.5, 8), lookback=10)


def test_mc_dropout_forecast_rows_normalised(ordinal_model, sine_series):
    seed = sine_series[:10]
    dist, paths = mc_dropout_forecast(ordinal_model, seed, 15, 20, np.random.default_rng(1), with_trajectories=True)
    assert dist.probs.shape == (15, 8)
    np.testing.assert_allclose(dist.probs.sum(axis=1), 1.0, atol=1e-9)
    assert paths.shape == (20, 15)


def test_mc_dropout_forecast_deterministic(ordinal_model, sine_series):
    seed = sine_series[:10]
    a = mc_dropout_forecast(ordinal_model, seed, 12, 30, np.random.default_rng(5))
    b = mc_dropout_forecast(ordinal_model, seed, 12, 30, np.random.default_rng(5))
    np.testing.assert_array_equal(a.probs, b.probs)


def test_single_sample_mc_equals_masked_rollout(ordinal_model, sine_series):
    seed = sine_series[:10]
    masks = sample_dropout_masks(ordinal_model.dropout, np.random.default_rng(3), batch=1)
    direct = forecast_ordinal(ordinal_model, seed, 8, masks)
    mc = mc_dropout_forecast(ordinal_model, seed, 8, 1, np.random.default_rng(3))
    np.testing.assert_allclose(mc.probs, direct.probs, atol=1e-12)


def test_seed_window_length_checked(ordinal_model):
    with pytest.raises(ValueError):
        mc_dropout_forecast(ordinal_model, np.zeros(9), 5, 2, np.random.default_rng(0))


def test_regression_without_dropout_floors_variance(rng, sine_series):
    model = Seq2SeqModel.build(REGRESSION, 5, rng, p_drop=0.0, lookback=10)
    dist = forecast_regression(model, sine_series[:10], 6, 4, np.random.default_rng(0))
    np.testing.assert_allclose(dist.var, 1e-8)


def test_forecast_mode_checked(ordinal_model, sine_series):
    with pytest.raises(ValueError):
        forecast_regression(ordinal_model, sine_series[:10], 3, 2, np.random.default_rng(0))


def test_batch_loss_independent_of_batch_size(ordinal_model, sine_series):
    w = make_windows(sine_series[:200], 10, stride=7)
    assert batch_loss(ordinal_model, w, 4) == pytest.approx(batch_loss(ordinal_model, w, 1000), rel=1e-12)
