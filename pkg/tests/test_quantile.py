
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_force_codebook
from tsqc.compressor import compress
from tsqc.core import Codebook, TimeSeries
from tsqc.metrics import compression_rate, l1_loss
from tsqc.quantile import QuantileTable, fit_codebook, optimize_max_cr, optimize_min_loss, quantize


def ts(values):
    return TimeSeries.from_values(values)


# Expected values below come from brute_force_codebook; e.g. for [1, 2, 8, 9]
# with n=2 the six 2-subsets give l1 = 0.5 for {1,8}, {1,9}, {2,8}, {2,9}.
@pytest.mark.parametrize(
    "values, n, levels, l1",
    [
        ([1, 2, 8, 9], 2, (1.0, 8.0), 0.5),
        ([1, 2, 4], 1, (2.0,), 1.0),
        ([3, 1, 2], 3, (1.0, 2.0, 3.0), 0.0),
    ],
)
def test_fit_codebook_examples(values, n, levels, l1):
    assert brute_force_codebook(values, n) == (l1, levels)
    cb = fit_codebook(ts(values), n)
    assert cb.levels == levels
    assert l1_loss(ts(values), quantize(ts(values), cb)) == l1


def test_fit_codebook_rejects_bad_n():
    with pytest.raises(ValueError):
        fit_codebook(ts([1, 1, 2]), 3)
    with pytest.raises(ValueError):
        fit_codebook(ts([1, 2]), 0)


def test_quantize_examples():
    assert quantize(ts([1, 2, 8, 9]), Codebook((1.0, 8.0))).values == (1.0, 1.0, 8.0, 8.0)
    assert quantize(ts([4.5]), Codebook((1.0, 8.0))).values == (1.0,)
    x = ts([5, 3, 3, 9])
    q = quantize(x, Codebook((3.0, 5.0, 9.0)))
    assert q.values == x.values and q.exact_mask == (False,) * 4


dyadic = st.integers(-40, 40).map(lambda k: k / 4)


@settings(max_examples=150, deadline=None)
@given(st.lists(dyadic, min_size=1, max_size=30), st.data())
def test_matches_brute_force(values, data):
    n_distinct = len(set(values))
    if n_distinct > 9:
        values = [v for v in values if v in sorted(set(values))[:9]]
        n_distinct = 9
    n = data.draw(st.integers(1, n_distinct))
    cb = fit_codebook(ts(values), n)
    got = l1_loss(ts(values), quantize(ts(values), cb))
    assert (got, cb.levels) == brute_force_codebook(values, n)


@settings(max_examples=60, deadline=None)
@given(st.lists(dyadic, min_size=1, max_size=40))
def test_table_consistency(values):
    table = QuantileTable(ts(values))
    costs = []
    for n in range(1, table.max_levels + 1):
        cb = table.codebook(n)
        l1 = l1_loss(ts(values), quantize(ts(values), cb))
        assert l1 == table.cost(n)
        assert cb == fit_codebook(ts(values), n)
        costs.append(l1)
    assert all(b <= a for a, b in zip(costs, costs[1:]))
    assert costs[-1] == 0


def test_generic_floats_close_to_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(30):
        x = rng.normal(size=rng.integers(2, 25))
        x = np.concatenate([x, x[: len(x) // 2]])
        for n in range(1, min(6, len(set(x.tolist()))) + 1):
            got = l1_loss(ts(x), quantize(ts(x), fit_codebook(ts(x), n)))
            assert got == pytest.approx(brute_force_codebook(x, n)[0], rel=1e-12, abs=1e-15)


def test_large_series_runs():
    rng = np.random.default_rng(0)
    x = np.round(rng.gamma(2.0, 10.0, size=3000), 1)
    table = QuantileTable(ts(x), 8)
    cb = table.codebook(8)
    assert len(cb) == 8
    assert l1_loss(ts(x), quantize(ts(x), cb)) == pytest.approx(table.cost(8), rel=1e-9)


@pytest.mark.parametrize(
    "values, delta, levels, cr",
    [
        ([1, 1, 1, 9, 9, 9], 0.0, (1.0, 9.0), 100 * 4 / 6),
        ([4, 4, 4, 4, 4], 0.0, (4.0,), 80.0),
        ([1, 2, 8, 9], 0.5, (1.0, 8.0), 50.0),
    ],
)
def test_optimize_max_cr_examples(values, delta, levels, cr):
    res = optimize_max_cr(ts(values), delta)
    assert res.feasible
    assert res.codebook.levels == levels
    assert res.cr_percent == pytest.approx(cr, abs=1e-12)
    assert res.l1 <= delta


def test_optimize_max_cr_infinite_delta():
    res = optimize_max_cr(ts([1, 5, 2, 8, 3]), float("inf"))
    assert res.feasible and res.n == 1


def test_optimize_max_cr_rejects_negative():
    with pytest.raises(ValueError):
        optimize_max_cr(ts([1, 2]), -0.1)


def test_optimize_min_loss_examples():
    res = optimize_min_loss(ts([1, 1, 1, 9, 9, 9]), 50)
    assert res.feasible and res.codebook.levels == (1.0, 9.0) and res.l1 == 0
    assert res.cr_percent == pytest.approx(200 / 3)
    res = optimize_min_loss(ts([1, 2, 3, 4]), 100)
    assert not res.feasible
    res = optimize_min_loss(ts([1, 2, 8, 9]), 0)
    assert res.feasible and res.n == 4 and res.l1 == 0
    with pytest.raises(ValueError):
        optimize_min_loss(ts([1, 2]), 101)


def _exhaustive(values):
    """(n, l1, cr) for every n, computed from brute-force codebooks."""
    out = []
    for n in range(1, len(set(values)) + 1):
        l1, levels = brute_force_codebook(values, n)
        q = quantize(ts(values), Codebook(levels))
        out.append((n, l1, compression_rate(len(values), len(compress(q)))))
    return out


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=1, max_size=25), st.sampled_from([0, 0.25, 0.5, 1, 2]))
def test_max_cr_is_optimal_among_n(values, delta):
    res = optimize_max_cr(ts(values), delta)
    best = max(cr for _, l1, cr in _exhaustive(values) if l1 <= delta)
    assert res.feasible and res.l1 <= delta
    assert res.cr_percent == best


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=1, max_size=25), st.sampled_from([0, 20, 50, 75, 90]))
def test_min_loss_is_optimal_among_n(values, r):
    res = optimize_min_loss(ts(values), r)
    ok = [l1 for _, l1, cr in _exhaustive(values) if cr >= r]
    assert res.feasible == bool(ok)
    if ok:
        assert res.cr_percent >= r
        assert res.l1 == min(ok)
