"""Quality measures: l1 loss, compression rate, variability and cloud errors."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .core import CompressedSeries, QuantizedSeries, TimeSeries

LOW_VARIABILITY_MAX = 50.0


def _values(x) -> Sequence[float]:
    if isinstance(x, (TimeSeries, QuantizedSeries)):
        return x.values
    return [float(v) for v in x]


def l1_loss(original, quantized) -> float:
    """Mean absolute deviation between two equally long value sequences.

    Accepts series objects or plain sequences on either side.
    """
    a, b = _values(original), _values(quantized)
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    if not a:
        raise ValueError("l1 loss of an empty series is undefined")
    return math.fsum(abs(x - y) for x, y in zip(a, b)) / len(a)


def compression_rate(n_original: int, m_compressed: int) -> float:
    """Percentage of samples removed: ``100 * (N - M) / N``."""
    if n_original <= 0:
        raise ValueError("original length must be positive")
    if not 1 <= m_compressed <= n_original:
        raise ValueError(f"compressed length {m_compressed} outside [1, {n_original}]")
    return 100.0 * (n_original - m_compressed) / n_original


def variability(values) -> float:
    """Percentage of jumps in a series: ``100 * (nonzero steps + 1) / N``.

    A constant series of length N scores ``100 / N``, not zero.
    """
    vs = _values(values)
    if not vs:
        raise ValueError("variability of an empty series is undefined")
    jumps = sum(1 for a, b in zip(vs, vs[1:]) if b - a != 0)
    return 100.0 * (jumps + 1) / len(vs)


def is_low_variability(values) -> bool:
    return variability(values) <= LOW_VARIABILITY_MAX


def _cloud_pair(a, b):
    a = np.asarray(getattr(a, "points", a), dtype=float)
    b = np.asarray(getattr(b, "points", b), dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    if a.shape != b.shape:
        raise ValueError(f"cloud shapes differ: {a.shape} vs {b.shape}")
    if a.shape[0] == 0:
        raise ValueError("empty point cloud")
    return a, b


def cloud_distance(a, b, mode: str = "max") -> float:
    """Max (``mode="max"``) or mean (``mode="mean"``) Euclidean distance between paired points."""
    a, b = _cloud_pair(a, b)
    dist = np.linalg.norm(a - b, axis=1)
    if mode == "max":
        return float(dist.max())
    if mode == "mean":
        return float(dist.mean())
    raise ValueError(f"unknown mode {mode!r}")


def relative_cloud_error(original, encoded, mode: str = "max") -> float:
    """Cloud distance normalized by the max or mean norm of the original points."""
    a, b = _cloud_pair(original, encoded)
    d = cloud_distance(a, b, mode)
    norms = np.linalg.norm(a, axis=1)
    scale = float(norms.max() if mode == "max" else norms.mean())
    if scale == 0.0:
        raise ZeroDivisionError("original cloud has zero norm")
    return d / scale


@dataclass(frozen=True)
class DistortionReport:
    l1: float
    relative_l1: float
    cr_percent: float
    varm_original: float
    varm_quantized: float
    n_original: int
    m_compressed: int
    # false when the original mean is 0 and relative_l1 is the raw l1
    relative_l1_normalized: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def distortion_report(
    original: TimeSeries, quantized: QuantizedSeries, compressed: CompressedSeries
) -> DistortionReport:
    l1 = l1_loss(original, quantized)
    mean = math.fsum(original.values) / len(original)
    if mean == 0.0:
        rel, normalized = l1, False
    else:
        rel, normalized = l1 / abs(mean), True
    return DistortionReport(
        l1=l1,
        relative_l1=rel,
        cr_percent=compression_rate(len(original), len(compressed)),
        varm_original=variability(original),
        varm_quantized=variability(quantized),
        n_original=len(original),
        m_compressed=len(compressed),
        relative_l1_normalized=normalized,
    )
