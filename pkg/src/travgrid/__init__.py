"""Traversability grids from LiDAR scans and camera images, CPU only.

The package turns sequences in the KITTI odometry layout into per-cell
traversable / non-traversable grids: multi-scan integration, a
world-aligned 2D grid, geometric and HSV appearance features per cell, a
kernel SVM trained with an in-package SMO solver, and a majority-vote
smoothing pass, plus evaluation and latency tooling around it.
"""

from .cloud import Pose, PointCloud
from .config import PipelineConfig, load_config
from .evaluate import (
    ConfusionCounts,
    EvalReport,
    GroundTruthConfig,
    LatencyRecorder,
    grid_ground_truth,
    metrics,
    score,
)
from .exceptions import ConfigError, DataError, TravgridError
from .grid import (
    NON_TRAVERSABLE,
    TRAVERSABLE,
    UNKNOWN,
    GridConfig,
    TraversabilityGrid,
    build_grid,
    integrate_clouds,
    quantize_center,
)
from .postfilter import filter_grid, filter_labels
from .svm import (
    FeatureScaler,
    KernelSvmClassifier,
    TraversabilityModel,
    load_model,
    save_model,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConfusionCounts",
    "DataError",
    "EvalReport",
    "FeatureScaler",
    "GridConfig",
    "GroundTruthConfig",
    "KernelSvmClassifier",
    "LatencyRecorder",
    "NON_TRAVERSABLE",
    "PipelineConfig",
    "PointCloud",
    "Pose",
    "TRAVERSABLE",
    "TravgridError",
    "TraversabilityGrid",
    "TraversabilityModel",
    "UNKNOWN",
    "build_grid",
    "filter_grid",
    "filter_labels",
    "grid_ground_truth",
    "integrate_clouds",
    "load_config",
    "load_model",
    "metrics",
    "quantize_center",
    "save_model",
    "score",
    "__version__",
]
