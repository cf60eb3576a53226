import numpy as np
import pytest

from events.peaks import PeakSet, candidate_peaks, detect_peaks, suppress


def test_sine_peaks_every_period():
    t = np.arange(400)
    peaks = detect_peaks(np.sin(2 * np.pi * t / 40), threshold=0.0, min_distance=5)
    np.testing.assert_array_equal(peaks.indices, 10 + 40 * np.arange(10))


def test_flat_top_reported_once_at_first_index():
    idx, heights = candidate_peaks([0.0, 1.0, 3.0, 3.0, 1.0, 0.0])
    np.testing.assert_array_equal(idx, [2])
    np.testing.assert_array_equal(heights, [3.0])


def test_threshold():
    peaks = detect_peaks([0.0, 1.0, 0.0, 3.0, 0.0], threshold=2.0, min_distance=1)
    np.testing.assert_array_equal(peaks.indices, [3])


def test_suppression_keeps_tallest():
    x = [0.0, 5.0, 0.0, 4.0, 0.0, 6.0, 0.0]
    np.testing.assert_array_equal(detect_peaks(x, min_distance=3).indices, [1, 5])
    np.testing.assert_array_equal(detect_peaks(x, min_distance=1).indices, [1, 3, 5])


def test_suppression_ties_prefer_earlier():
    kept = suppress(np.array([1, 3]), np.array([2.0, 2.0]), 3)
    np.testing.assert_array_equal(kept, [1])


def test_equal_peaks_keep_earlier_end_to_end():
    np.testing.assert_array_equal(detect_peaks([0.0, 2.0, 0.0, 2.0, 0.0], min_distance=3).indices, [1])


def test_flat_top_distance_measured_from_first_index():
    x = [0.0, 3.0, 3.0, 3.0, 0.0, 2.9, 0.0]
    np.testing.assert_array_equal(detect_peaks(x, min_distance=4).indices, [1, 5])
    np.testing.assert_array_equal(detect_peaks(x, min_distance=5).indices, [1])


def test_no_peaks():
    assert len(detect_peaks(np.arange(20.0))) == 0
    assert len(detect_peaks([1.0, 2.0])) == 0
    assert len(detect_peaks(np.full(10, 4.0))) == 0


def test_bad_min_distance():
    with pytest.raises(ValueError):
        detect_peaks(np.zeros(10), min_distance=0)


def test_peakset_must_increase():
    with pytest.raises(ValueError):
        PeakSet([5, 3])
    assert PeakSet([1, 4]).as_float().dtype == np.float64
