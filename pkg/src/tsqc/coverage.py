"""Delta-coverage of multi-dimensional point clouds with K-means.

A coverage is a set of centroids such that every (non-outlier) point lies
within Euclidean distance ``delta`` of the centroid it is assigned to.
Encoding collapses each covered point onto its centroid; outliers are kept
verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

OUTLIER = -1
DEFAULT_MAX_ITER = 300
DEFAULT_NORMALCY_FACTOR = 3.0
RADIUS_STATISTICS = ("max", "mean", "rms")


def as_cloud(points) -> np.ndarray:
    """Validate and return a read-only ``(N, d)`` float array."""
    a = np.array(points, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
        raise ValueError(f"expected a non-empty (N, d) point cloud, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("point cloud has non-finite coordinates")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Coverage:
    """Centroids plus a per-point assignment; ``OUTLIER`` marks points kept exactly.

    ``delta`` is ``None`` for a plain clustering that carries no fidelity promise.
    """

    centroids: np.ndarray
    assignment: np.ndarray
    delta: Optional[float] = None

    def __post_init__(self):
        c = as_cloud(self.centroids)
        a = np.array(self.assignment, dtype=np.int64)
        a.setflags(write=False)
        if a.ndim != 1:
            raise ValueError("assignment must be one-dimensional")
        if np.any((a < OUTLIER) | (a >= c.shape[0])):
            raise ValueError("assignment refers to a missing centroid")
        if self.delta is not None and not self.delta >= 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        object.__setattr__(self, "centroids", c)
        object.__setattr__(self, "assignment", a)
        if self.delta is not None:
            object.__setattr__(self, "delta", float(self.delta))

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    @property
    def outliers(self) -> Tuple[int, ...]:
        return tuple(np.flatnonzero(self.assignment == OUTLIER).tolist())

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.assignment[self.assignment >= 0], minlength=self.k)

    def __eq__(self, other):
        if not isinstance(other, Coverage):
            return NotImplemented
        return (
            self.delta == other.delta
            and np.array_equal(self.centroids, other.centroids)
            and np.array_equal(self.assignment, other.assignment)
        )

    __hash__ = None


def _sqdist(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    return ((x[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)


def point_distances(cloud, coverage: Coverage) -> np.ndarray:
    """Distance of every point to its assigned centroid (0 for outliers)."""
    x = as_cloud(cloud)
    a = coverage.assignment
    if a.size != x.shape[0] or coverage.dim != x.shape[1]:
        raise ValueError("coverage does not match the cloud")
    d = np.zeros(x.shape[0])
    ok = a >= 0
    d[ok] = np.linalg.norm(x[ok] - coverage.centroids[a[ok]], axis=1)
    return d


def _farthest_point_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    chosen = [int(rng.integers(x.shape[0]))]
    nearest = ((x - x[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        i = int(np.argmax(nearest))
        chosen.append(i)
        nearest = np.minimum(nearest, ((x - x[i]) ** 2).sum(axis=1))
    return x[chosen].copy()


def kmeans(cloud, k: int, seed: int = 0, max_iter: int = DEFAULT_MAX_ITER) -> Coverage:
    """Lloyd's algorithm from a seeded farthest-point start.

    The first centre is a seeded random point, each later one the point
    farthest from those already chosen. Iteration stops when assignments no
    longer change or after ``max_iter`` rounds. A cluster that empties is
    re-seeded with the point lying farthest from its own centroid.
    """
    x = as_cloud(cloud)
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    centroids = _farthest_point_init(x, k, np.random.default_rng(seed))
    assign = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iter):
        d2 = _sqdist(x, centroids)
        new = d2.argmin(axis=1)
        sizes = np.bincount(new, minlength=k)
        for j in np.flatnonzero(sizes == 0):
            own = d2[np.arange(n), new]
            # never strip the last member of another cluster
            own[sizes[new] <= 1] = -1.0
            i = int(np.argmax(own))
            if own[i] < 0:
                break
            sizes[new[i]] -= 1
            sizes[j] = 1
            new[i] = j
        if np.array_equal(new, assign):
            break
        assign = new
        for j in range(k):
            members = x[assign == j]
            if len(members):
                centroids[j] = members.mean(axis=0)
    return Coverage(centroids, assign)


def satisfies(cloud, coverage: Coverage, delta: float) -> bool:
    return bool(np.all(point_distances(cloud, coverage) <= delta))


def delta_coverage(
    cloud, delta: float, seed: int = 0, max_iter: int = DEFAULT_MAX_ITER
) -> Coverage:
    """Grow K from 1 until K-means puts every point within ``delta`` of its centroid.

    Farthest-point seeding places every distinct point as a centre once K
    reaches the number of distinct points, so the search always stops there.
    """
    if not delta >= 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    x = as_cloud(cloud)
    n_distinct = np.unique(x, axis=0).shape[0]
    for k in range(1, n_distinct + 1):
        cov = kmeans(x, k, seed, max_iter)
        if satisfies(x, cov, delta):
            return replace(cov, delta=delta)
    raise AssertionError("unreachable: K = distinct points always covers")


def encode(cloud, coverage: Coverage) -> np.ndarray:
    """Replace covered points by their centroid; outliers pass through."""
    x = as_cloud(cloud)
    a = coverage.assignment
    if a.size != x.shape[0] or coverage.dim != x.shape[1]:
        raise ValueError("coverage does not match the cloud")
    out = x.copy()
    ok = a >= 0
    out[ok] = coverage.centroids[a[ok]]
    return out


def streaming_encode(point, coverage: Coverage) -> Tuple[int, Coverage]:
    """Code one new point against a delta-coverage.

    Returns the nearest centroid's index when it lies within ``delta``
    (lowest index on ties); otherwise the point becomes a new centroid. The
    input coverage is never modified.
    """
    if coverage.delta is None:
        raise ValueError("streaming encoding needs a coverage with a delta")
    p = np.asarray(point, dtype=float).reshape(-1)
    if p.size != coverage.dim:
        raise ValueError(f"point has dimension {p.size}, coverage {coverage.dim}")
    if not np.all(np.isfinite(p)):
        raise ValueError("point has non-finite coordinates")
    d = np.linalg.norm(coverage.centroids - p, axis=1)
    j = int(np.argmin(d))
    if d[j] <= coverage.delta:
        return j, coverage
    grown = np.vstack([coverage.centroids, p])
    return grown.shape[0] - 1, Coverage(grown, coverage.assignment, coverage.delta)


class StreamEncoder:
    """Stateful wrapper around :func:`streaming_encode`; single writer only."""

    def __init__(self, coverage: Coverage):
        self.coverage = coverage

    def push(self, point) -> int:
        code, self.coverage = streaming_encode(point, self.coverage)
        return code

    def encode_many(self, points) -> List[int]:
        return [self.push(p) for p in as_cloud(points)]


def small_cluster_outliers(coverage: Coverage, min_fraction: float) -> Tuple[int, ...]:
    """Indices of points in clusters holding less than ``min_fraction`` of all points."""
    if not 0 < min_fraction < 1:
        raise ValueError(f"min_fraction must be in (0, 1), got {min_fraction}")
    total = coverage.assignment.size
    small = np.flatnonzero(coverage.cluster_sizes() < min_fraction * total)
    return tuple(np.flatnonzero(np.isin(coverage.assignment, small)).tolist())


def _cover_subset(x: np.ndarray, keep: np.ndarray, delta: float, seed: int, max_iter: int):
    sub = delta_coverage(x[keep], delta, seed, max_iter)
    assign = np.full(x.shape[0], OUTLIER, dtype=np.int64)
    assign[keep] = sub.assignment
    return Coverage(sub.centroids, assign, delta)


def outlier_delta_coverage(
    cloud,
    delta: float,
    min_fraction: float,
    seed: int = 0,
    probe_k: Optional[int] = None,
    max_iter: int = DEFAULT_MAX_ITER,
) -> Coverage:
    """Keep small-cluster points exactly and delta-cover the rest.

    Small clusters are detected with K-means at ``probe_k`` clusters; by
    default that is the K of a plain delta-coverage of the whole cloud. If
    every cluster is small, nothing is treated as an outlier.
    """
    x = as_cloud(cloud)
    if probe_k is None:
        probe = delta_coverage(x, delta, seed, max_iter)
    else:
        if not delta >= 0:
            raise ValueError(f"delta must be >= 0, got {delta}")
        probe = kmeans(x, probe_k, seed, max_iter)
    flagged = small_cluster_outliers(probe, min_fraction)
    keep = np.ones(x.shape[0], dtype=bool)
    keep[list(flagged)] = False
    if not flagged or not keep.any():
        if probe_k is None:
            return probe
        keep[:] = True
    return _cover_subset(x, keep, delta, seed, max_iter)


def normalcy_radius(
    points, centroid, factor: float = DEFAULT_NORMALCY_FACTOR, statistic: str = "max"
) -> float:
    """``factor`` times a statistic of the member distances to ``centroid``.

    ``statistic`` is ``"max"`` (the default), ``"mean"`` or ``"rms"``; the
    root-mean-square distance is the cluster's spread about its mean.
    """
    if statistic not in RADIUS_STATISTICS:
        raise ValueError(f"statistic must be one of {RADIUS_STATISTICS}, got {statistic!r}")
    p = np.asarray(points, dtype=float)
    if p.ndim == 1:
        p = p[None, :] if np.ndim(centroid) else p[:, None]
    if p.shape[0] == 0:
        raise ValueError("empty cluster")
    c = np.asarray(centroid, dtype=float).reshape(-1)
    d = np.linalg.norm(p - c, axis=1)
    if statistic == "max":
        spread = d.max()
    elif statistic == "mean":
        spread = d.mean()
    else:
        spread = np.sqrt(np.mean(d * d))
    return float(factor * spread)


def normalcy_radii(
    cloud, coverage: Coverage, factor: float = DEFAULT_NORMALCY_FACTOR, statistic: str = "max"
) -> np.ndarray:
    """Radius per centroid, from its assigned points; 0 for an empty cluster."""
    x = as_cloud(cloud)
    radii = np.zeros(coverage.k)
    for j in range(coverage.k):
        members = x[coverage.assignment == j]
        if len(members):
            radii[j] = normalcy_radius(members, coverage.centroids[j], factor, statistic)
    return radii


def normalcy_outliers(
    cloud, coverage: Coverage, factor: float = DEFAULT_NORMALCY_FACTOR, statistic: str = "max"
) -> Tuple[int, ...]:
    """Points that fall outside their own cluster's normalcy circle, plus existing outliers."""
    x = as_cloud(cloud)
    d = point_distances(x, coverage)
    radii = normalcy_radii(x, coverage, factor, statistic)
    a = coverage.assignment
    outside = np.zeros(a.size, dtype=bool)
    ok = a >= 0
    outside[ok] = d[ok] > radii[a[ok]]
    outside |= ~ok
    return tuple(np.flatnonzero(outside).tolist())


def with_outliers(coverage: Coverage, indices: Sequence[int]) -> Coverage:
    a = coverage.assignment.copy()
    a[list(indices)] = OUTLIER
    return Coverage(coverage.centroids, a, coverage.delta)


def encode_with_normalcy(
    cloud, coverage: Coverage, factor: float = DEFAULT_NORMALCY_FACTOR, statistic: str = "max"
) -> np.ndarray:
    """Encode points inside their own cluster's normalcy circle; keep the rest exactly.

    A point never moves to a centroid other than its own, so an existing
    delta bound is preserved.
    """
    return encode(cloud, with_outliers(coverage, normalcy_outliers(cloud, coverage, factor, statistic)))


def combined_outlier_coverage(
    cloud,
    k: int,
    min_fraction: float,
    factor: float = DEFAULT_NORMALCY_FACTOR,
    seed: int = 0,
    max_iter: int = DEFAULT_MAX_ITER,
    statistic: str = "max",
) -> Coverage:
    """Small-cluster outliers first, then normalcy circles on the remaining big clusters.

    K-means runs at ``k``; points of small clusters become outliers. The big
    clusters keep their centroids, their radii come from their own members,
    and members outside their circle are kept exactly as well.
    """
    x = as_cloud(cloud)
    base = kmeans(x, k, seed, max_iter)
    cov = with_outliers(base, small_cluster_outliers(base, min_fraction))
    return with_outliers(cov, normalcy_outliers(x, cov, factor, statistic))
