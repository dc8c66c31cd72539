"""skyrx: desk-scale real-time hyperspectral anomaly detection pipeline."""

from .cube import (
    GroundTruthMask,
    InsSample,
    InsTrack,
    LineMeta,
    RadianceCube,
    RawCube,
    ScoreMap,
    band_nearest,
    cube_validate,
    pixel_at,
)
from .rx import CubeStats, compute_stats, normalize_scores, rx_scores, threshold_scores

__version__ = "0.1.0"

__all__ = [
    "GroundTruthMask",
    "InsSample",
    "InsTrack",
    "LineMeta",
    "RadianceCube",
    "RawCube",
    "ScoreMap",
    "band_nearest",
    "cube_validate",
    "pixel_at",
    "CubeStats",
    "compute_stats",
    "normalize_scores",
    "rx_scores",
    "threshold_scores",
    "__version__",
]
