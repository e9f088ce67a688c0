import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tsqc.banded import ThresholdBand, quantize_banded, rolling_band, slice_boundaries, slice_indices
from tsqc.compressor import compress
from tsqc.core import TimeSeries
from tsqc.metrics import compression_rate, variability


def ts(values):
    return TimeSeries.from_values(values)


@pytest.mark.parametrize(
    "lo, hi, n, expected",
    [(0, 10, 2, (0, 5, 10)), (0, 10, 1, (0, 10)), (-5, 5, 5, (-5, -3, -1, 1, 3, 5))],
)
def test_slice_boundaries(lo, hi, n, expected):
    assert slice_boundaries(lo, hi, n) == expected


@pytest.mark.parametrize("lo, hi, n", [(1, 1, 2), (2, 1, 2), (0, 1, 0)])
def test_slice_boundaries_errors(lo, hi, n):
    with pytest.raises(ValueError):
        slice_boundaries(lo, hi, n)


def test_hand_worked_example():
    # I_0 = [0, 5) holds {2, 3} -> 2.5; I_1 = [5, 10] holds {7}
    bq = quantize_banded(ts([-1, 2, 3, 7, 12]), ThresholdBand(0, 10), 2, "median")
    assert bq.quantized.values == (-1.0, 2.5, 2.5, 7.0, 12.0)
    assert bq.quantized.exact_mask == (True, False, False, False, True)
    assert bq.slice_stats == {0: 2.5, 1: 7.0}


def test_boundary_membership():
    idx = slice_indices([0, 5, 10, 10.5, -0.1], ThresholdBand(0, 10), 2)
    assert idx.tolist() == [0, 1, 1, -1, -1]


def test_single_slice_mean():
    bq = quantize_banded(ts([1, 2, 6]), ThresholdBand(0, 10), 1, "mean")
    assert bq.quantized.values == (3.0, 3.0, 3.0)


def test_all_out_of_band():
    x = ts([11, 12, 15])
    bq = quantize_banded(x, ThresholdBand(0, 10), 3)
    assert bq.quantized.values == x.values
    assert all(bq.quantized.exact_mask)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        ThresholdBand(1, 1)
    with pytest.raises(ValueError):
        ThresholdBand((0, 5), (1, 4))
    with pytest.raises(ValueError):
        quantize_banded(ts([1, 2]), ThresholdBand(0, 1), 0)
    with pytest.raises(ValueError):
        quantize_banded(ts([1, 2]), ThresholdBand(0, 1), 2, "mode")
    with pytest.raises(ValueError):
        quantize_banded(ts([1, 2]), ThresholdBand((0, 0, 0), (1, 1, 1)), 2)


def test_dynamic_band_aggregates_raw_values():
    # slice 0 at t=0 is [0, 5), at t=1 it is [10, 15): both land in slice 0
    band = ThresholdBand((0.0, 10.0), (10.0, 20.0))
    bq = quantize_banded(ts([1, 13]), band, 2, "median")
    assert bq.slice_stats == {0: 7.0}
    assert bq.quantized.values == (7.0, 7.0)


def test_rolling_band_examples():
    b = rolling_band(ts([1, 2, 3, 4]), 2, 0, 1, epsilon=1e-6)
    assert b.lower == (1.0, 1.0, 2.0, 3.0)
    assert b.upper == (1.0 + 1e-6, 2.0, 3.0, 4.0)
    x = ts([3, 1, 4, 1, 5])
    b = rolling_band(x, 5, 0, 1)
    assert b.lower[-1] == 1.0 and b.upper[-1] == 5.0
    c = rolling_band(ts([7.0] * 6), 3, 0.1, 0.9, epsilon=0.5)
    assert set(c.lower) == {7.0} and set(c.upper) == {7.5}


def test_rolling_band_large_magnitude_still_valid():
    b = rolling_band(ts([1e300] * 3), 2, 0.1, 0.9)
    assert all(h > l for l, h in zip(b.lower, b.upper))


@pytest.mark.parametrize("window, lq, uq", [(1, 0, 1), (3, 0.5, 0.5), (3, -0.1, 1), (3, 0.2, 1.1)])
def test_rolling_band_errors(window, lq, uq):
    with pytest.raises(ValueError):
        rolling_band(ts([1, 2, 3]), window, lq, uq)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(-50, 50, allow_subnormal=False), min_size=1, max_size=60),
    st.floats(-20, 0),
    st.floats(1, 30),
    st.integers(1, 10),
    st.sampled_from(["median", "mean"]),
)
def test_exactness_bound_and_cr(values, lo, width, n, stat):
    hi = lo + width
    x = ts(values)
    bq = quantize_banded(x, ThresholdBand(lo, hi), n, stat)
    for v, q, exact in zip(x.values, bq.quantized.values, bq.quantized.exact_mask):
        if v > hi or v < lo:
            assert exact and q == v
        else:
            assert not exact
            assert abs(v - q) <= (hi - lo) / n
    c = compress(bq.quantized)
    assert compression_rate(len(x), len(c)) == pytest.approx(100 - variability(bq.quantized), abs=1e-9)


def test_more_slices_usually_lower_in_band_error():
    rng = np.random.default_rng(11)
    x = ts(rng.normal(50, 10, 2000))
    band = ThresholdBand(30.0, 70.0)
    errs = []
    for n in (1, 2, 3, 5, 10):
        bq = quantize_banded(x, band, n)
        mask = ~np.array(bq.quantized.exact_mask)
        errs.append(np.abs(np.array(x.values) - np.array(bq.quantized.values))[mask].mean())
    assert errs == sorted(errs, reverse=True)
