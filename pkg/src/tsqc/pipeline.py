"""End-to-end runs of the three quantizers: series in, artifact and stats out."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from . import coverage as cov
from .banded import ThresholdBand, quantize_banded, rolling_band
from .compressor import compress
from .core import TimeSeries
from .formats import (
    Artifact,
    BandedArtifact,
    BandSpec,
    CoverageArtifact,
    QuantileArtifact,
)
from .metrics import distortion_report, relative_cloud_error, cloud_distance
from .quantile import fit_codebook, optimize_max_cr, optimize_min_loss, quantize


@dataclass
class Run:
    artifact: Artifact
    stats: dict
    feasible: bool = True


def run_quantile(
    series: TimeSeries,
    n: Optional[int] = None,
    max_cr_delta: Optional[float] = None,
    min_loss_cr: Optional[float] = None,
    max_levels: Optional[int] = None,
) -> Run:
    """Exactly one of ``n``, ``max_cr_delta`` or ``min_loss_cr`` selects the mode."""
    given = [x is not None for x in (n, max_cr_delta, min_loss_cr)]
    if sum(given) != 1:
        raise ValueError("exactly one of n, max_cr_delta, min_loss_cr is required")
    feasible = True
    if n is not None:
        mode, codebook = "fixed_n", fit_codebook(series, n)
    elif max_cr_delta is not None:
        res = optimize_max_cr(series, max_cr_delta, max_levels)
        mode, codebook, feasible = "max_cr", res.codebook, res.feasible
    else:
        res = optimize_min_loss(series, min_loss_cr, max_levels)
        mode, codebook, feasible = "min_loss", res.codebook, res.feasible
    q = quantize(series, codebook)
    c = compress(q)
    report = distortion_report(series, q, c)
    stats = {
        "algorithm": "quantile_a",
        "mode": mode,
        "n": len(codebook),
        "codebook": list(codebook.levels),
        "feasible": feasible,
        **report.to_dict(),
    }
    if max_cr_delta is not None:
        stats["delta"] = max_cr_delta
    if min_loss_cr is not None:
        stats["r"] = min_loss_cr
    return Run(Artifact.wrap(QuantileArtifact(codebook.levels, c)), stats, feasible)


def run_banded(
    series: TimeSeries,
    n_slices: int,
    statistic: str = "median",
    low: Optional[float] = None,
    high: Optional[float] = None,
    rolling: Optional[tuple] = None,
    epsilon: float = 1e-9,
) -> Run:
    """Constant band from ``low``/``high`` or rolling band from ``(window, lower_q, upper_q)``."""
    if rolling is not None:
        window, lq, uq = rolling
        band = rolling_band(series, int(window), float(lq), float(uq), epsilon)
        spec = BandSpec("rolling", window=int(window), lower_q=float(lq), upper_q=float(uq), epsilon=epsilon)
    else:
        band = ThresholdBand(low, high)
        spec = BandSpec("constant", lower=float(low), upper=float(high))
    bq = quantize_banded(series, band, n_slices, statistic)
    c = compress(bq.quantized)
    index = {t: i for i, t in enumerate(series.timestamps)}
    exact = tuple(bq.quantized.exact_mask[index[t]] for t in c.timestamps)
    report = distortion_report(series, bq.quantized, c)
    stats = {
        "algorithm": "banded_b",
        "n_slices": n_slices,
        "statistic": statistic,
        "band": spec.mode,
        "n_exact": bq.n_exact,
        "slice_stats": {str(j): m for j, m in sorted(bq.slice_stats.items())},
        **report.to_dict(),
    }
    art = BandedArtifact(n_slices, statistic, spec, tuple(sorted(bq.slice_stats.items())), c, exact)
    return Run(Artifact.wrap(art), stats)


def coverage_artifact(timestamps, cloud, coverage: cov.Coverage) -> CoverageArtifact:
    x = cov.as_cloud(cloud)
    a = coverage.assignment
    return CoverageArtifact(
        coverage.delta,
        tuple(tuple(r) for r in coverage.centroids.tolist()),
        tuple(int(t) for t in timestamps),
        tuple(a.tolist()),
        tuple(tuple(r) for r in x[a == cov.OUTLIER].tolist()),
    )


def _errors(x: np.ndarray, encoded: np.ndarray) -> dict:
    out = {"d1": cloud_distance(x, encoded, "max"), "d2": cloud_distance(x, encoded, "mean")}
    for key, mode in (("l_max", "max"), ("l_2", "mean")):
        try:
            out[key] = relative_cloud_error(x, encoded, mode)
        except ZeroDivisionError:
            out[key] = None
    return out


def run_coverage(
    timestamps,
    cloud,
    delta: float,
    seed: int = 0,
    outlier_fraction: Optional[float] = None,
    normalcy_factor: Optional[float] = None,
    normalcy_statistic: str = "max",
) -> Run:
    x = cov.as_cloud(cloud)
    if outlier_fraction is not None:
        coverage = cov.outlier_delta_coverage(x, delta, outlier_fraction, seed)
    else:
        coverage = cov.delta_coverage(x, delta, seed)
    if normalcy_factor is not None:
        coverage = cov.with_outliers(coverage, cov.normalcy_outliers(x, coverage, normalcy_factor, normalcy_statistic))
    art = coverage_artifact(timestamps, x, coverage)
    stats = {
        "algorithm": "coverage_c",
        "delta": delta,
        "seed": seed,
        "k": coverage.k,
        "n_points": int(x.shape[0]),
        "dim": int(x.shape[1]),
        "n_outliers": len(coverage.outliers),
        **_errors(x, art.decoded_points()),
    }
    return Run(Artifact.wrap(art), stats)


def kmeans_sweep(
    cloud,
    k_max: int,
    seed: int = 0,
    normalcy_factor: Optional[float] = None,
    normalcy_statistic: str = "max",
) -> List[dict]:
    """Relative errors of plain K-means encoding for K = 1..k_max (plot-ready rows)."""
    x = cov.as_cloud(cloud)
    rows = []
    for k in range(1, min(k_max, x.shape[0]) + 1):
        c = cov.kmeans(x, k, seed)
        row = {"k": k, **_errors(x, cov.encode(x, c))}
        if normalcy_factor is not None:
            enc = cov.encode_with_normalcy(x, c, normalcy_factor, normalcy_statistic)
            row["l_max_normalcy"] = _errors(x, enc)["l_max"]
        rows.append(row)
    return rows
