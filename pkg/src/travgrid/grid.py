"""Ground-plane traversability grid: cell bucketing and scan integration.

The grid is a square of ``size x size`` cells of ``resolution`` meters,
anchored at a world-frame origin (minimum corner). Points are assigned to
cells by flooring their offset from the origin, so a point exactly on a
cell's maximum edge belongs to the next cell. Cells with at least
``min_points`` points are predictable; the rest are skipped by the
classifier and reported as unknown.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .cloud import FRAME_LIDAR, PointCloud, Pose, transform_to_world
from .exceptions import ConfigError

# Cell label values, shared by ground truth, prediction, and filtering.
UNKNOWN = 0
TRAVERSABLE = 1
NON_TRAVERSABLE = 2

LABEL_NAMES = {UNKNOWN: "U", TRAVERSABLE: "T", NON_TRAVERSABLE: "N"}
NAME_LABELS = {v: k for k, v in LABEL_NAMES.items()}


def _exact_ratio(num: float, den: float, what: str) -> int:
    ratio = num / den
    rounded = round(ratio)
    if rounded < 1 or abs(ratio - rounded) > 1e-9 * max(1.0, abs(ratio)):
        raise ConfigError(f"{what} must be a positive integer, got {ratio}")
    return int(rounded)


@dataclass(frozen=True)
class GridConfig:
    """Geometry and feature parameters of the analysis grid."""

    max_range: float = 12.0
    resolution: float = 0.4
    internal_resolution: float = 0.2
    min_points: int = 2
    integration_count: int = 3
    curvity_bins: int = 160
    hsv_bins: tuple[int, int, int] = (32, 8, 48)
    filter_weight: int = 3

    def __post_init__(self):
        if self.max_range <= 0 or self.resolution <= 0 or self.internal_resolution <= 0:
            raise ConfigError("max_range, resolution and internal_resolution must be > 0")
        _exact_ratio(self.max_range, self.resolution, "max_range / resolution")
        _exact_ratio(self.resolution, self.internal_resolution,
                     "resolution / internal_resolution")
        if self.min_points < 1:
            raise ConfigError("min_points must be >= 1")
        if self.integration_count < 1:
            raise ConfigError("integration_count must be >= 1")
        if self.curvity_bins < 2:
            raise ConfigError("curvity_bins must be >= 2")
        if len(self.hsv_bins) != 3 or any(b < 1 for b in self.hsv_bins):
            raise ConfigError("hsv_bins must be three positive counts")
        if self.filter_weight < 1:
            raise ConfigError("filter_weight must be >= 1")

    @property
    def size(self) -> int:
        """Cells per side."""
        return _exact_ratio(self.max_range, self.resolution, "max_range / resolution")

    @property
    def subcells_per_side(self) -> int:
        return _exact_ratio(self.resolution, self.internal_resolution,
                            "resolution / internal_resolution")

    @property
    def curvity_span(self) -> float:
        """Fixed distance-histogram span used by the curvity feature."""
        return self.max_range * math.sqrt(2.0)

    @property
    def hsv_dim(self) -> int:
        return int(sum(self.hsv_bins))


@dataclass(frozen=True)
class Cell:
    """Read-only view of one grid cell."""

    row: int
    col: int
    point_indices: np.ndarray
    predictable: bool
    gt_label: int = UNKNOWN
    predicted_label: int = UNKNOWN
    filtered_label: int = UNKNOWN


@dataclass
class TraversabilityGrid:
    """Cell assignment of one integrated cloud plus per-cell labels.

    Cell contents are stored in CSR style: ``point_order`` lists cloud
    indices grouped by flat cell id (row * size + col) and ``cell_starts``
    holds the segment boundaries.
    """

    size: int
    resolution: float
    origin: np.ndarray                  # (2,) world xy of the minimum corner
    frame_index: int
    point_order: np.ndarray             # (n_in,) indices into the source cloud
    cell_starts: np.ndarray             # (size*size + 1,) segment offsets
    counts: np.ndarray                  # (size, size) int32
    predictable: np.ndarray             # (size, size) bool
    gt_labels: np.ndarray = None        # (size, size) int8
    predicted: np.ndarray = None        # (size, size) int8
    filtered: np.ndarray = None         # (size, size) int8

    def __post_init__(self):
        shape = (self.size, self.size)
        for name in ("gt_labels", "predicted", "filtered"):
            if getattr(self, name) is None:
                setattr(self, name, np.full(shape, UNKNOWN, dtype=np.int8))

    @property
    def num_cells(self) -> int:
        return self.size * self.size

    @property
    def origin_cell(self) -> tuple[int, int]:
        """World-quantized (col, row) key of the origin cell.

        Keys are stable across frames as long as grid origins sit on
        multiples of the resolution, which is what the per-frame
        re-centering guarantees; they anchor color propagation.
        """
        return (int(round(self.origin[0] / self.resolution)),
                int(round(self.origin[1] / self.resolution)))

    def cell_points(self, row: int, col: int) -> np.ndarray:
        flat = row * self.size + col
        return self.point_order[self.cell_starts[flat]:self.cell_starts[flat + 1]]

    def cell(self, row: int, col: int) -> Cell:
        return Cell(
            row=row, col=col,
            point_indices=self.cell_points(row, col),
            predictable=bool(self.predictable[row, col]),
            gt_label=int(self.gt_labels[row, col]),
            predicted_label=int(self.predicted[row, col]),
            filtered_label=int(self.filtered[row, col]),
        )

    def ordered_flat_ids(self) -> np.ndarray:
        """Flat cell id of each entry of ``point_order``."""
        counts = np.diff(self.cell_starts)
        return np.repeat(np.arange(self.num_cells), counts)


def quantize_center(xy, resolution: float) -> np.ndarray:
    """Snap a world position to the nearest multiple of the cell size."""
    xy = np.asarray(xy, dtype=np.float64).reshape(2)
    return np.round(xy / resolution) * resolution


def build_grid(cloud: PointCloud, center, config: GridConfig,
               frame_index: int = 0) -> TraversabilityGrid:
    """Bucket a world-frame cloud into the grid centered at ``center``.

    Points outside the square footprint are dropped. ``center`` should
    already be quantized (see :func:`quantize_center`) so that cell
    boundaries stay world-aligned across frames.
    """
    if cloud.frame != "world":
        raise ValueError("build_grid expects a world-frame cloud")
    size = config.size
    center = np.asarray(center, dtype=np.float64).reshape(2)
    origin = center - config.max_range / 2.0

    rel = (cloud.xyz[:, :2] - origin) / config.resolution
    idx = np.floor(rel).astype(np.int64)
    in_range = ((idx[:, 0] >= 0) & (idx[:, 0] < size) &
                (idx[:, 1] >= 0) & (idx[:, 1] < size))
    cols = idx[in_range, 0]
    rows = idx[in_range, 1]
    flat = rows * size + cols
    source = np.flatnonzero(in_range)

    order = np.argsort(flat, kind="stable")
    point_order = source[order]
    counts_flat = np.bincount(flat, minlength=size * size)
    cell_starts = np.concatenate([[0], np.cumsum(counts_flat)])
    counts = counts_flat.reshape(size, size).astype(np.int32)

    return TraversabilityGrid(
        size=size,
        resolution=config.resolution,
        origin=origin,
        frame_index=frame_index,
        point_order=point_order,
        cell_starts=cell_starts,
        counts=counts,
        predictable=counts >= config.min_points,
    )


def integrate_clouds(clouds, poses, count: int) -> PointCloud:
    """Merge the last ``count`` LiDAR-frame clouds into one world cloud.

    ``clouds`` and ``poses`` run oldest to newest and must pair up;
    ``poses`` map LiDAR to world. The merged cloud keeps the newest
    scan's index.
    """
    if len(clouds) != len(poses):
        raise ValueError(f"{len(clouds)} clouds but {len(poses)} poses")
    if len(clouds) < count:
        raise ValueError(f"need {count} clouds to integrate, got {len(clouds)}")
    picked = [(transform_to_world(c, p))
              for c, p in zip(clouds[-count:], poses[-count:])]
    return PointCloud(
        xyz=np.concatenate([c.xyz for c in picked]),
        reflectance=np.concatenate([c.reflectance for c in picked]),
        semantic_class=np.concatenate([c.semantic_class for c in picked]),
        instance_id=np.concatenate([c.instance_id for c in picked]),
        frame="world",
        scan_index=picked[-1].scan_index,
    )
