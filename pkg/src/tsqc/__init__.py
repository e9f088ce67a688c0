"""Lossy quantization and compression of monitoring time series."""

from .banded import (
    BandedQuantization,
    ThresholdBand,
    quantize_banded,
    rolling_band,
    slice_boundaries,
)
from .compressor import InconsistentGridError, change_points, compress, decompress
from .core import Codebook, CompressedSeries, QuantizedSeries, TimeSeries, nearest_level
from .coverage import (
    OUTLIER,
    Coverage,
    StreamEncoder,
    combined_outlier_coverage,
    delta_coverage,
    encode,
    encode_with_normalcy,
    kmeans,
    normalcy_radius,
    outlier_delta_coverage,
    small_cluster_outliers,
    streaming_encode,
)
from .metrics import (
    DistortionReport,
    cloud_distance,
    compression_rate,
    l1_loss,
    relative_cloud_error,
    variability,
)
from .quantile import (
    OptimizationResult,
    QuantileTable,
    fit_codebook,
    optimize_max_cr,
    optimize_min_loss,
    quantize,
)

__version__ = "0.1.0"
