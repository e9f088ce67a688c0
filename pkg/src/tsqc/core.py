"""Domain types shared by the quantizers, and the nearest-level lookup."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Tuple

import numpy as np


def _as_values(values: Iterable[float], what: str) -> Tuple[float, ...]:
    out = []
    for v in values:
        v = float(v)
        if not math.isfinite(v):
            raise ValueError(f"{what} must be finite, got {v!r}")
        # -0.0 would not survive a change-point round trip bit-exactly
        out.append(v + 0.0)
    return tuple(out)


def _as_timestamps(timestamps: Iterable[int]) -> Tuple[int, ...]:
    out = []
    for t in timestamps:
        if isinstance(t, float):
            if not t.is_integer():
                raise ValueError(f"timestamp must be an integer, got {t!r}")
        elif isinstance(t, bool) or not hasattr(t, "__index__"):
            raise ValueError(f"timestamp must be an integer, got {t!r}")
        out.append(int(t))
    for a, b in zip(out, out[1:]):
        if b <= a:
            raise ValueError(f"timestamps must be strictly increasing ({a} then {b})")
    return tuple(out)


@dataclass(frozen=True)
class TimeSeries:
    """Integer epoch-ms timestamps paired with finite real values."""

    timestamps: Tuple[int, ...]
    values: Tuple[float, ...]

    def __post_init__(self):
        ts = _as_timestamps(self.timestamps)
        vs = _as_values(self.values, "values")
        if len(ts) != len(vs):
            raise ValueError(f"{len(ts)} timestamps but {len(vs)} values")
        if not ts:
            raise ValueError("a time series needs at least one point")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vs)

    @classmethod
    def from_values(cls, values: Iterable[float], start: int = 0, step: int = 1) -> "TimeSeries":
        values = list(values)
        return cls(tuple(range(start, start + step * len(values), step)), tuple(values))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class Codebook:
    """Strictly increasing quantization levels."""

    levels: Tuple[float, ...]

    def __post_init__(self):
        levels = _as_values(self.levels, "levels")
        if not levels:
            raise ValueError("codebook must contain at least one level")
        for a, b in zip(levels, levels[1:]):
            if not a < b:
                raise ValueError(f"codebook levels must be strictly increasing ({a} then {b})")
        object.__setattr__(self, "levels", levels)

    def __len__(self) -> int:
        return len(self.levels)


@dataclass(frozen=True)
class QuantizedSeries:
    """A series whose values were replaced by codebook levels.

    ``exact_mask[k]`` is true where the original value was kept verbatim
    (threshold-violating points of the banded quantizer). Every other value
    must be a codebook level.
    """

    timestamps: Tuple[int, ...]
    values: Tuple[float, ...]
    codebook: Codebook
    exact_mask: Tuple[bool, ...] = field(default=())

    def __post_init__(self):
        ts = _as_timestamps(self.timestamps)
        vs = _as_values(self.values, "values")
        mask = tuple(bool(m) for m in self.exact_mask) or (False,) * len(vs)
        if not (len(ts) == len(vs) == len(mask)):
            raise ValueError("timestamps, values and exact_mask must have equal length")
        if not ts:
            raise ValueError("a quantized series needs at least one point")
        levels = set(self.codebook.levels)
        for v, exact in zip(vs, mask):
            if not exact and v not in levels:
                raise ValueError(f"value {v!r} is not a codebook level")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vs)
        object.__setattr__(self, "exact_mask", mask)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class CompressedSeries:
    """Change-points left after sequential-duplicate elimination."""

    points: Tuple[Tuple[int, float], ...]
    original_length: int
    original_last_timestamp: int

    def __post_init__(self):
        pts = tuple((int(t), float(v) + 0.0) for t, v in self.points)
        if not pts:
            raise ValueError("a compressed series has at least one point")
        if len(pts) > self.original_length:
            raise ValueError("more change-points than original samples")
        _as_timestamps(t for t, _ in pts)
        _as_values((v for _, v in pts), "values")
        for (_, a), (_, b) in zip(pts, pts[1:]):
            if a == b:
                raise ValueError("consecutive change-points share a value")
        if self.original_last_timestamp < pts[-1][0]:
            raise ValueError("original_last_timestamp precedes the last change-point")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "original_length", int(self.original_length))
        object.__setattr__(self, "original_last_timestamp", int(self.original_last_timestamp))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def timestamps(self) -> Tuple[int, ...]:
        return tuple(t for t, _ in self.points)

    @property
    def values(self) -> Tuple[float, ...]:
        return tuple(v for _, v in self.points)


def nearest_level(value: float, codebook: Codebook | Sequence[float]) -> float:
    """Return the level closest to ``value``; an exact tie goes to the lower level."""
    levels = codebook.levels if isinstance(codebook, Codebook) else tuple(codebook)
    if not levels:
        raise ValueError("codebook is empty")
    if not math.isfinite(value):
        raise ValueError(f"value must be finite, got {value!r}")
    i = bisect.bisect_left(levels, value)
    if i == 0:
        return levels[0]
    if i == len(levels):
        return levels[-1]
    lo, hi = levels[i - 1], levels[i]
    return hi if hi - value < value - lo else lo


def nearest_levels(values, levels) -> np.ndarray:
    """Vectorized :func:`nearest_level` over an array of values (same tie rule)."""
    levels = np.asarray(levels, dtype=float)
    values = np.asarray(values, dtype=float)
    if levels.size == 0:
        raise ValueError("codebook is empty")
    i = np.searchsorted(levels, values, side="left")
    lo = levels[np.clip(i - 1, 0, levels.size - 1)]
    hi = levels[np.clip(i, 0, levels.size - 1)]
    out = np.where(hi - values < values - lo, hi, lo)
    out = np.where(i == 0, levels[0], out)
    return np.where(i == levels.size, levels[-1], out)
