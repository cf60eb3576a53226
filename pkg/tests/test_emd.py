import numpy as np
import pytest

from events.emd import emd_sift, find_extrema, is_monotone, zero_crossings


def two_tone(n=1000):
    t = np.arange(n)
    return np.sin(2 * np.pi * t / 10), np.sin(2 * np.pi * t / 100), 0.002 * t


def test_reconstruction_is_exact():
    fast, slow, trend = two_tone()
    x = fast + slow + trend
    result = emd_sift(x)
    assert result.n_imfs >= 2
    assert np.max(np.abs(result.reconstruct() - x)) < 1e-8


def test_first_imf_is_the_fast_tone():
    fast, slow, _ = two_tone()
    result = emd_sift(fast + slow)
    inner = slice(100, 900)
    assert np.corrcoef(result.imfs[0][inner], fast[inner])[0, 1] > 0.9


def test_max_imfs_respected(rng):
    x = rng.normal(size=500)
    result = emd_sift(x, max_imfs=2)
    assert result.n_imfs <= 2
    assert np.max(np.abs(result.reconstruct() - x)) < 1e-8


def test_few_extrema_gives_single_imf():
    x = np.linspace(0.0, 1.0, 50) ** 2
    result = emd_sift(x)
    assert result.n_imfs == 1
    np.testing.assert_array_equal(result.imfs[0], x)
    np.testing.assert_array_equal(result.residual, 0.0)


def test_rejects_short_or_bad_input():
    with pytest.raises(ValueError):
        emd_sift(np.zeros(5))
    with pytest.raises(ValueError):
        emd_sift(np.zeros(100), max_imfs=0)


def test_helpers():
    x = np.array([0.0, 2.0, -1.0, 3.0, -2.0, 0.5])
    maxima, minima = find_extrema(x)
    np.testing.assert_array_equal(maxima, [1, 3])
    np.testing.assert_array_equal(minima, [2, 4])
    assert zero_crossings(x) == 4
    assert is_monotone(np.arange(5.0))
    assert not is_monotone(x)
