import numpy as np
import pytest

from core.ordinal import BinPartition, CategoricalDensity, OrdinalSequence, decode, encode, fit_partition, \
    piecewise_uniform_logpdf, sequence_nll


def test_encode_clamps_and_closes_last_bin(partition):
    assert encode(-1.0, partition) == 0
    assert encode(1.0, partition) == 9
    assert encode(-5.0, partition) == 0
    assert encode(5.0, partition) == 9
    assert encode(-0.8, partition) == 1


def test_encode_rejects_nan(partition):
    with pytest.raises(ValueError):
        encode(float("nan"), partition)


def test_decode_encode_within_half_bin(rng):
    p = BinPartition(-3.0, 7.0, 300)
    x = rng.uniform(-3.0, 7.0, 100_000)
    decoded = p.midpoints[p.encode(x)]
    assert np.max(np.abs(decoded - x)) <= p.width / 2 + 1e-12


def test_decode_range(partition):
    assert decode(0, partition) == pytest.approx(-0.9)
    with pytest.raises(ValueError):
        decode(10, partition)


def test_fit_partition_pads_range():
    p = fit_partition([0.0, 1.0, 2.0], 4, pad_fraction=0.05)
    assert p.lower_bound == pytest.approx(-0.1)
    assert p.upper_bound == pytest.approx(2.1)
    assert p.bin_count == 4


def test_fit_partition_constant_series():
    p = fit_partition([3.0, 3.0], 5, pad_fraction=0.1)
    assert p.lower_bound == pytest.approx(2.7)
    assert p.upper_bound == pytest.approx(3.3)
    with pytest.raises(ValueError):
        fit_partition([3.0, 3.0], 5, pad_fraction=0.0)


def test_piecewise_uniform_integrates_to_one(rng, partition):
    probs = rng.dirichlet(np.ones(partition.bin_count))
    density = probs / partition.width
    assert np.sum(density * partition.width) == pytest.approx(1.0, abs=1e-15)
    x = partition.midpoints[3]
    assert piecewise_uniform_logpdf(x, CategoricalDensity(probs), partition) == \
        pytest.approx(np.log(probs[3] / partition.width))


def test_zero_probability_is_floored(partition):
    probs = np.zeros(10)
    probs[0] = 1.0
    value = piecewise_uniform_logpdf(0.95, probs, partition)
    assert np.isfinite(value)
    assert value == pytest.approx(np.log(1e-12 / partition.width))


def test_sequence_nll_is_additive(rng, partition):
    truth = rng.uniform(-1, 1, 12)
    densities = [CategoricalDensity(rng.dirichlet(np.ones(10))) for _ in range(12)]
    whole = sequence_nll(truth, densities, partition)
    parts = sequence_nll(truth[:5], densities[:5], partition) + sequence_nll(truth[5:], densities[5:], partition)
    assert whole == pytest.approx(parts, abs=1e-12)


def test_sequence_nll_length_mismatch(partition):
    with pytest.raises(ValueError):
        sequence_nll([0.0, 0.1], [np.full(10, 0.1)], partition)


def test_ordinal_sequence_round_trip(partition):
    seq = OrdinalSequence.from_series([-0.95, 0.05, 0.95], partition)
    assert list(seq.indices) == [0, 5, 9]
    assert seq.one_hot().shape == (3, 10)
    np.testing.assert_allclose(seq.decoded(), [-0.9, 0.1, 0.9])


def test_partition_rejects_bad_bounds():
    with pytest.raises(ValueError):
        BinPartition(1.0, 1.0, 4)
    with pytest.raises(ValueError):
        BinPartition(0.0, 1.0, 1)
