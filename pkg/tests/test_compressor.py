import pytest
from hypothesis import given, strategies as st

from tsqc.compressor import InconsistentGridError, change_points, compress, decompress
from tsqc.core import Codebook, CompressedSeries, QuantizedSeries
from tsqc.metrics import compression_rate, variability


def qs(values, ts=None):
    ts = ts or tuple(range(1, len(values) + 1))
    return QuantizedSeries(ts, tuple(values), Codebook(tuple(sorted(set(values)))))


def test_run_boundaries():
    c = compress(qs([1.0, 1.0, 2.0, 2.0, 1.0]))
    assert c.points == ((1, 1.0), (3, 2.0), (5, 1.0))
    assert c.original_length == 5 and c.original_last_timestamp == 5


def test_constant_and_single():
    assert len(compress(qs([3.0] * 9))) == 1
    assert compress(qs([3.0])).points == ((1, 3.0),)


def test_decompress_examples():
    c = CompressedSeries(((1, 2.0),), 3, 3)
    assert decompress(c, [1, 2, 3]).values == (2.0, 2.0, 2.0)
    c = CompressedSeries(((1, 2.0), (3, 5.0)), 4, 4)
    assert decompress(c, [1, 2, 3, 4]).values == (2.0, 2.0, 5.0, 5.0)


def test_decompress_grid_errors():
    c = CompressedSeries(((1, 2.0), (3, 5.0)), 4, 4)
    with pytest.raises(InconsistentGridError):
        decompress(c, [1, 2, 4])
    with pytest.raises(InconsistentGridError):
        decompress(c, [0, 1, 3])
    with pytest.raises(InconsistentGridError):
        decompress(c, [])


def test_change_points_only():
    c = compress(qs([1.0, 1.0, 2.0]))
    assert change_points(c).timestamps == (1, 3)


values_st = st.lists(st.sampled_from([-1.5, 0.0, 2.25, 7.0]), min_size=1, max_size=60)


@given(values_st)
def test_round_trip_and_cr_identity(values):
    q = qs(values, tuple(range(100, 100 + 7 * len(values), 7)))
    c = compress(q)
    assert decompress(c, q.timestamps).values == q.values
    jumps = sum(a != b for a, b in zip(values, values[1:]))
    assert len(c) == jumps + 1
    assert compression_rate(len(q), len(c)) == pytest.approx(100 - variability(q), abs=1e-9)
    # idempotent on its own output
    again = compress(change_points(c))
    assert again.points == c.points
