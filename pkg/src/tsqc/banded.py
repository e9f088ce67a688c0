"""Importance-banded quantization.

Points outside a (possibly time-varying) threshold band are kept exactly;
points inside the band are binned into ``n`` equal slices of ``[L, H]`` and
replaced by a statistic of their slice.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple, Union

import numpy as np

from .core import Codebook, QuantizedSeries, TimeSeries

STATISTICS = ("median", "mean")
DEFAULT_SLICES = 2
MAX_SLICES = 10
DEFAULT_EPSILON = 1e-9

Bound = Union[float, Tuple[float, ...]]


@dataclass(frozen=True)
class ThresholdBand:
    """Lower/upper thresholds, each a constant or one value per timestamp."""

    lower: Bound
    upper: Bound

    def __post_init__(self):
        for name in ("lower", "upper"):
            b = getattr(self, name)
            if np.ndim(b) == 0:
                b = float(b)
                ok = math.isfinite(b)
            else:
                b = tuple(float(x) for x in b)
                ok = all(math.isfinite(x) for x in b)
            if not ok:
                raise ValueError(f"{name} threshold must be finite")
            object.__setattr__(self, name, b)
        lo, hi = np.broadcast_arrays(np.asarray(self.lower), np.asarray(self.upper))
        if lo.size == 0:
            raise ValueError("empty threshold band")
        if np.any(lo >= hi):
            raise ValueError("lower threshold must be strictly below upper threshold")

    @property
    def is_constant(self) -> bool:
        return isinstance(self.lower, float) and isinstance(self.upper, float)

    def arrays(self, n: int) -> Tuple[np.ndarray, np.ndarray]:
        """Per-timestamp (L, H) arrays for a series of length ``n``."""
        lo, hi = np.asarray(self.lower, dtype=float), np.asarray(self.upper, dtype=float)
        for b in (lo, hi):
            if b.ndim and b.size != n:
                raise ValueError(f"band has {b.size} entries, series has {n}")
        return np.broadcast_to(lo, (n,)).copy(), np.broadcast_to(hi, (n,)).copy()


@dataclass(frozen=True)
class BandedQuantization:
    quantized: QuantizedSeries
    slice_stats: Dict[int, float]
    n_slices: int
    statistic: str

    @property
    def n_exact(self) -> int:
        return sum(self.quantized.exact_mask)


def slice_boundaries(lower: float, upper: float, n: int) -> Tuple[float, ...]:
    """The ``n + 1`` equally spaced cut points ``L + (H - L) * k / n``."""
    if not lower < upper:
        raise ValueError(f"lower ({lower}) must be below upper ({upper})")
    if n < 1:
        raise ValueError(f"slice count must be >= 1, got {n}")
    return tuple(lower + (upper - lower) * k / n for k in range(n + 1))


def _boundary_matrix(lo: np.ndarray, hi: np.ndarray, n: int) -> np.ndarray:
    k = np.arange(n + 1)
    return lo[:, None] + (hi - lo)[:, None] * k[None, :] / n


def slice_indices(values, band: ThresholdBand, n: int) -> np.ndarray:
    """Slice index of every in-band value, -1 above/below the band.

    Slices are half-open ``[c_j, c_{j+1})`` except the last, which is closed.
    """
    x = np.asarray(values, dtype=float)
    lo, hi = band.arrays(x.size)
    inside = (x >= lo) & (x <= hi)
    cuts = _boundary_matrix(lo, hi, n)
    # count interior cut points c_1..c_{n-1} at or below x
    j = np.count_nonzero(cuts[:, 1:n] <= x[:, None], axis=1)
    return np.where(inside, j, -1)


def _statistic(vals: Sequence[float], statistic: str) -> float:
    if statistic == "median":
        return float(statistics.median(vals))
    m = math.fsum(vals) / len(vals)
    # rounding must not push the mean outside the slice it summarizes
    return min(max(m, min(vals)), max(vals))


def quantize_banded(
    series: TimeSeries, band: ThresholdBand, n: int = DEFAULT_SLICES, statistic: str = "median"
) -> BandedQuantization:
    """Keep out-of-band points exactly; replace in-band points by their slice statistic.

    The representative of slice ``j`` aggregates all raw values whose slice
    index is ``j``, across time, even when the band moves.
    """
    if n < 1:
        raise ValueError(f"slice count must be >= 1, got {n}")
    if statistic not in STATISTICS:
        raise ValueError(f"statistic must be one of {STATISTICS}, got {statistic!r}")
    x = np.asarray(series.values, dtype=float)
    idx = slice_indices(x, band, n)
    stats: Dict[int, float] = {}
    for j in np.unique(idx[idx >= 0]):
        stats[int(j)] = _statistic(x[idx == j].tolist(), statistic)
    out = [stats[int(j)] if j >= 0 else v for v, j in zip(series.values, idx)]
    mask = tuple(bool(j < 0) for j in idx)
    levels = sorted(set(stats.values())) or [out[0]]
    q = QuantizedSeries(series.timestamps, tuple(out), Codebook(tuple(levels)), mask)
    return BandedQuantization(q, stats, n, statistic)


def rolling_band(
    series: TimeSeries,
    window: int,
    lower_q: float,
    upper_q: float,
    epsilon: float = DEFAULT_EPSILON,
) -> ThresholdBand:
    """Per-timestamp thresholds from quantiles of the trailing ``window`` samples.

    The window is clamped to the available prefix, and it includes the
    current sample. Where the two quantiles coincide the upper threshold is
    lifted to ``L + epsilon`` (or the next representable float above L).
    """
    if window < 2:
        raise ValueError(f"window must be >= 2, got {window}")
    if not 0 <= lower_q < upper_q <= 1:
        raise ValueError(f"need 0 <= lower_q < upper_q <= 1, got {lower_q}, {upper_q}")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    x = np.asarray(series.values, dtype=float)
    lo = np.empty_like(x)
    hi = np.empty_like(x)
    for k in range(x.size):
        w = x[max(0, k - window + 1): k + 1]
        lo[k], hi[k] = np.quantile(w, [lower_q, upper_q])
    flat = hi <= lo
    hi[flat] = lo[flat] + epsilon
    still = hi <= lo
    hi[still] = np.nextafter(lo[still], np.inf)
    return ThresholdBand(tuple(lo.tolist()), tuple(hi.tolist()))
