"""Optimal n-level quantile quantization under an l1 loss.

The levels are chosen among the distinct data values. With nearest-level
assignment the cells of any codebook are contiguous runs of the sorted
distinct values, and the l1-optimal representative of a cell is its
weighted median, so the optimal codebook is an optimal partition of the
sorted distinct values into ``n`` contiguous cells. :class:`QuantileTable`
solves that partition problem for every ``n`` at once by dynamic
programming over suffixes, which also makes the lexicographic tie-break
between equally good codebooks straightforward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .compressor import compress
from .core import Codebook, QuantizedSeries, TimeSeries, nearest_levels
from .metrics import compression_rate

# full cost matrices above this many distinct values are built row block by row block
_DENSE_LIMIT = 2048


@dataclass(frozen=True)
class OptimizationResult:
    codebook: Codebook
    n: int
    l1: float
    cr_percent: float
    feasible: bool


class QuantileTable:
    """Optimal codebooks of a series for every level count up to ``max_levels``."""

    def __init__(self, series: TimeSeries, max_levels: Optional[int] = None):
        values = np.asarray(series.values, dtype=float)
        self.n_samples = values.size
        self.distinct, counts = np.unique(values, return_counts=True)
        n_distinct = self.distinct.size
        if max_levels is None:
            max_levels = n_distinct
        if not 1 <= max_levels <= n_distinct:
            raise ValueError(f"level count must be in [1, {n_distinct}], got {max_levels}")
        self.max_levels = max_levels
        self._weight = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self._mass = np.concatenate([[0.0], np.cumsum(counts * self.distinct)])
        self._dense = self._cost_rows(0, n_distinct) if n_distinct <= _DENSE_LIMIT else None
        self._solve()

    def _cost_rows(self, i0: int, i1: int) -> np.ndarray:
        """Cost of cells ``distinct[i..e]`` for rows ``i0 <= i < i1``, inf where e < i."""
        V = self.distinct.size
        W, S, v = self._weight, self._mass, self.distinct
        i = np.arange(i0, i1)[:, None]
        e = np.arange(V)[None, :]
        valid = e >= i
        ee = np.where(valid, e, i)
        # lower weighted median: first m with 2*W[m+1] >= W[i] + W[e+1]
        m = np.searchsorted(2 * W[1:], W[i] + W[ee + 1], side="left")
        left = v[m] * (W[m + 1] - W[i]) - (S[m + 1] - S[i])
        right = (S[ee + 1] - S[m + 1]) - v[m] * (W[ee + 1] - W[m + 1])
        cost = np.maximum(left + right, 0.0)
        return np.where(valid, cost, np.inf)

    def _median(self, i: int, e: int) -> float:
        W = self._weight
        m = int(np.searchsorted(2 * W[1:], W[i] + W[e + 1], side="left"))
        return float(self.distinct[m])

    def _solve(self) -> None:
        V, K = self.distinct.size, self.max_levels
        # best[j][i]: minimal total cost of covering distinct[i:] with exactly j cells
        self._best = np.full((K + 1, V + 1), np.inf)
        self._best[0, V] = 0.0
        self._cut = np.full((K + 1, V), -1, dtype=np.int64)
        block = V if self._dense is not None else max(1, (1 << 22) // max(V, 1))
        for j in range(1, K + 1):
            tail = self._best[j - 1, 1:]
            for i0 in range(0, V - j + 1, block):
                i1 = min(i0 + block, V - j + 1)
                rows = self._dense[i0:i1] if self._dense is not None else self._cost_rows(i0, i1)
                total = rows + tail[None, :]
                best = total.min(axis=1)
                first = total.argmin(axis=1)
                self._best[j, i0:i1] = best
                self._cut[j, i0:i1] = first
                ties = np.count_nonzero(total == best[:, None], axis=1) > 1
                for r in np.flatnonzero(ties & np.isfinite(best)):
                    cands = np.flatnonzero(total[r] == best[r])
                    self._cut[j, i0 + r] = min(
                        cands, key=lambda e: self._levels_from(j, i0 + r, int(e))
                    )

    def _levels_from(self, j: int, i: int, first_cut: Optional[int] = None) -> Tuple[float, ...]:
        out: List[float] = []
        while j > 0:
            e = int(self._cut[j, i]) if first_cut is None else first_cut
            first_cut = None
            out.append(self._median(i, e))
            i, j = e + 1, j - 1
        return tuple(out)

    def codebook(self, n: int) -> Codebook:
        if not 1 <= n <= self.max_levels:
            raise ValueError(f"level count must be in [1, {self.max_levels}], got {n}")
        return Codebook(self._levels_from(n, 0))

    def cost(self, n: int) -> float:
        """Optimal l1 loss for ``n`` levels as tracked by the DP (prefix-sum arithmetic)."""
        return float(self._best[n, 0]) / self.n_samples


def fit_codebook(series: TimeSeries, n: int) -> Codebook:
    """The ``n`` data values minimizing the l1 loss of nearest-level quantization.

    Among equally good codebooks the lexicographically smallest is returned.
    """
    n_distinct = len(set(series.values))
    if not 1 <= n <= n_distinct:
        raise ValueError(f"n must be in [1, {n_distinct}] for this series, got {n}")
    return QuantileTable(series, n).codebook(n)


def quantize(series: TimeSeries, codebook: Codebook) -> QuantizedSeries:
    q = nearest_levels(series.values, codebook.levels)
    return QuantizedSeries(series.timestamps, tuple(q.tolist()), codebook)


def _evaluate(x: np.ndarray, levels) -> Tuple[float, float]:
    q = nearest_levels(x, levels)
    l1 = math.fsum(np.abs(x - q).tolist()) / x.size
    m = 1 + int(np.count_nonzero(q[1:] != q[:-1]))
    return l1, compression_rate(x.size, m)


def _scan(series: TimeSeries, max_levels: Optional[int]):
    table = QuantileTable(series, max_levels)
    x = np.asarray(series.values, dtype=float)
    rows = []
    for n in range(1, table.max_levels + 1):
        cb = table.codebook(n)
        l1, cr = _evaluate(x, cb.levels)
        rows.append((n, cb, l1, cr))
    return rows


def optimize_max_cr(
    series: TimeSeries, delta: float, max_levels: Optional[int] = None
) -> OptimizationResult:
    """Maximize the compression rate subject to ``l1 <= delta``.

    Every level count from 1 to ``max_levels`` (default: all distinct values)
    is tried, since the compression rate need not be monotone in n.
    """
    if not delta >= 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    rows = _scan(series, max_levels)
    ok = [r for r in rows if r[2] <= delta]
    if ok:
        n, cb, l1, cr = min(ok, key=lambda r: (-r[3], r[0]))
        return OptimizationResult(cb, n, l1, cr, True)
    n, cb, l1, cr = min(rows, key=lambda r: (r[2], r[0]))
    return OptimizationResult(cb, n, l1, cr, False)


def optimize_min_loss(
    series: TimeSeries, r: float, max_levels: Optional[int] = None
) -> OptimizationResult:
    """Minimize the l1 loss subject to a compression rate of at least ``r`` percent."""
    if not 0 <= r <= 100:
        raise ValueError(f"r must be in [0, 100], got {r}")
    rows = _scan(series, max_levels)
    ok = [row for row in rows if row[3] >= r]
    if ok:
        n, cb, l1, cr = min(ok, key=lambda row: (row[2], -row[3], row[0]))
        return OptimizationResult(cb, n, l1, cr, True)
    n, cb, l1, cr = min(rows, key=lambda row: (-row[3], row[2], row[0]))
    return OptimizationResult(cb, n, l1, cr, False)


def quantize_and_compress(series: TimeSeries, codebook: Codebook):
    q = quantize(series, codebook)
    return q, compress(q)
