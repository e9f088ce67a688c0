"""Independent brute-force oracles used by the tests."""

import itertools

import numpy as np


def brute_force_codebook(values, n):
    """(l1, levels) minimizing the l1 loss over all n-subsets of distinct values.

    Subsets are generated in lexicographic order and the first minimum wins,
    so ties resolve to the lexicographically smallest level tuple. Each point
    costs its distance to the closest level, with no tie rule involved.
    """
    x = np.asarray(values, dtype=float)
    distinct = sorted(set(x.tolist()))
    combos = np.array(list(itertools.combinations(distinct, n)), dtype=float)
    dist = np.abs(x[:, None, None] - combos[None, :, :]).min(axis=2)
    totals = dist.sum(axis=0) / x.size
    best = int(np.argmin(totals))
    return float(totals[best]), tuple(combos[best].tolist())


def brute_force_kmeans(points, k):
    """Centroids of the k-partition with the least within-cluster squared distance."""
    x = np.asarray(points, dtype=float)
    best = None
    for labels in itertools.product(range(k), repeat=len(x)):
        labels = np.array(labels)
        if len(set(labels.tolist())) != k:
            continue
        cents = np.array([x[labels == j].mean(axis=0) for j in range(k)])
        sse = float(((x - cents[labels]) ** 2).sum())
        if best is None or sse < best[0]:
            best = (sse, cents)
    return best[1]


def _ball(boundary):
    if not boundary:
        return None, -1.0
    p0 = boundary[0]
    if len(boundary) == 1:
        return p0, 0.0
    a = np.array([p - p0 for p in boundary[1:]])
    g = a @ a.T
    lam = np.linalg.lstsq(2 * g, np.diag(g), rcond=None)[0]
    c = p0 + a.T @ lam
    return c, float(np.linalg.norm(c - p0))


def min_enclosing_radius(points):
    """Radius of the smallest enclosing ball (Welzl's recursion, fine for a few points)."""
    pts = [np.asarray(p, dtype=float) for p in points]
    d = len(pts[0])

    def welzl(p, r):
        if not p or len(r) == d + 1:
            return _ball(r)
        c, rad = welzl(p[1:], r)
        if c is not None and np.linalg.norm(p[0] - c) <= rad * (1 + 1e-12) + 1e-12:
            return c, rad
        return welzl(p[1:], r + [p[0]])

    return welzl(pts, [])[1]


def min_coverage_size(points, delta):
    """Fewest balls of radius delta (free centres) covering every point; N <= ~12."""
    x = np.asarray(points, dtype=float)
    n = len(x)
    full = (1 << n) - 1
    # generous on the boundary so the oracle stays a lower bound
    slack = delta * (1 + 1e-7) + 1e-12
    feasible = [False] * (full + 1)
    for mask in range(1, full + 1):
        idx = [i for i in range(n) if mask >> i & 1]
        feasible[mask] = min_enclosing_radius(x[idx]) <= slack
    best = [0] + [n + 1] * full
    for mask in range(1, full + 1):
        low = mask & -mask
        rest = mask ^ low
        sub = rest
        while True:
            s = sub | low
            if feasible[s]:
                best[mask] = min(best[mask], 1 + best[mask ^ s])
            if sub == 0:
                break
            sub = (sub - 1) & rest
    return best[full]
