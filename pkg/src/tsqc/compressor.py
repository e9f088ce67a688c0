"""Sequential-duplicate elimination and step-function (LOCF) reconstruction."""

from __future__ import annotations

import bisect
from typing import Sequence

from .core import CompressedSeries, QuantizedSeries, TimeSeries, _as_timestamps


class InconsistentGridError(ValueError):
    """The reconstruction grid does not contain every change-point timestamp."""


def compress(quantized: QuantizedSeries | TimeSeries) -> CompressedSeries:
    """Keep the first sample of each run of equal consecutive values."""
    ts, vs = quantized.timestamps, quantized.values
    if not vs:
        raise ValueError("cannot compress an empty series")
    points = [(ts[0], vs[0])]
    for t, v in zip(ts[1:], vs[1:]):
        if v != points[-1][1]:
            points.append((t, v))
    return CompressedSeries(tuple(points), len(vs), ts[-1])


def decompress(compressed: CompressedSeries, timestamps: Sequence[int]) -> TimeSeries:
    """Expand change-points over ``timestamps`` by carrying each value forward."""
    grid = list(_as_timestamps(timestamps))
    if not grid:
        raise InconsistentGridError("empty reconstruction grid")
    if grid[0] != compressed.points[0][0]:
        raise InconsistentGridError(
            f"grid starts at {grid[0]}, series starts at {compressed.points[0][0]}"
        )
    out = [0.0] * len(grid)
    starts = []
    for t, _ in compressed.points:
        i = bisect.bisect_left(grid, t)
        if i == len(grid) or grid[i] != t:
            raise InconsistentGridError(f"change-point timestamp {t} is not on the grid")
        starts.append(i)
    starts.append(len(grid))
    for (_, v), lo, hi in zip(compressed.points, starts, starts[1:]):
        out[lo:hi] = [v] * (hi - lo)
    return TimeSeries(tuple(grid), tuple(out))


def change_points(compressed: CompressedSeries) -> TimeSeries:
    """The change-point series alone, for when no grid is available."""
    return TimeSeries(compressed.timestamps, compressed.values)
