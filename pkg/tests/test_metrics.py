import pytest
from hypothesis import given, strategies as st

from tsqc.metrics import (
    cloud_distance,
    compression_rate,
    is_low_variability,
    l1_loss,
    relative_cloud_error,
    variability,
)


@pytest.mark.parametrize(
    "x, q, expected", [([1, 2, 3], [1, 2, 3], 0.0), ([0, 10], [1, 9], 1.0), ([1, 2, 4], [2, 2, 2], 1.0)]
)
def test_l1_loss(x, q, expected):
    assert l1_loss(x, q) == expected


def test_l1_length_mismatch():
    with pytest.raises(ValueError):
        l1_loss([1, 2], [1])


@pytest.mark.parametrize("n, m, expected", [(10, 4, 60.0), (7, 7, 0.0), (1000, 14, 98.6)])
def test_compression_rate(n, m, expected):
    assert compression_rate(n, m) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("n, m", [(5, 6), (0, 0), (5, 0)])
def test_compression_rate_errors(n, m):
    with pytest.raises(ValueError):
        compression_rate(n, m)


@pytest.mark.parametrize(
    "values, expected", [([1, 2, 3], 100.0), ([1, 1, 2, 2], 50.0), ([5, 5, 5, 5, 5], 20.0), ([7], 100.0)]
)
def test_variability(values, expected):
    assert variability(values) == expected


def test_variability_classification():
    assert is_low_variability([1, 1, 2, 2])
    assert not is_low_variability([1, 2, 3])
    with pytest.raises(ValueError):
        variability([])


series_st = st.lists(st.integers(-5, 5), min_size=1, max_size=40)


@given(series_st)
def test_variability_range(values):
    assert 0 < variability(values) <= 100


@given(st.lists(st.integers(), min_size=1, max_size=30, unique=True).map(sorted))
def test_monotone_series_fully_variable(values):
    assert variability(values) == 100.0


@given(series_st, st.randoms())
def test_l1_symmetric_nonneg(values, rnd):
    other = [v + rnd.randint(-2, 2) for v in values]
    assert l1_loss(values, values) == 0
    assert l1_loss(values, other) == l1_loss(other, values) >= 0


@given(st.integers(1, 500), st.data())
def test_cr_antitone_in_m(n, data):
    m1 = data.draw(st.integers(1, n))
    m2 = data.draw(st.integers(m1, n))
    assert compression_rate(n, m2) <= compression_rate(n, m1)


def test_cloud_distance_examples():
    a = [(0, 0), (0, 0)]
    b = [(3, 4), (0, 0)]
    assert cloud_distance(a, a, "max") == 0
    assert cloud_distance(a, b, "max") == 5.0
    assert cloud_distance(a, b, "mean") == 2.5
    with pytest.raises(ValueError):
        cloud_distance(a, [(0, 0)])
    with pytest.raises(ValueError):
        cloud_distance(a, b, "median")


def test_relative_cloud_error_examples():
    orig = [(3, 4), (6, 8)]
    assert relative_cloud_error(orig, orig, "max") == 0
    assert relative_cloud_error([(3, 4)], [(0, 0)], "max") == 1.0
    shifted = [(3, 5), (6, 9)]
    # d1 = 1, largest norm = 10
    assert relative_cloud_error(orig, shifted, "max") == pytest.approx(0.1, rel=1e-15)
    with pytest.raises(ZeroDivisionError):
        relative_cloud_error([(0, 0)], [(1, 1)], "max")


@given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=1, max_size=20), st.randoms())
def test_mean_distance_below_max(points, rnd):
    other = [(x + rnd.uniform(-1, 1), y) for x, y in points]
    assert cloud_distance(points, other, "mean") <= cloud_distance(points, other, "max") + 1e-12
