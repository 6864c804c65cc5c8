"""Per-cell geometric features of a 3D point set.

All features are computed from the points of one grid cell. The first
block comes from the covariance eigenstructure of the set; the second
block measures the spatial arrangement of the points (height spread along
the fitted-plane normal, sub-cell occupancy, range-histogram emptiness,
bounding volume). The feature vector has 21 values; see FEATURE_NAMES for
the column contract.

Eigenvalues are sorted descending and clamped at zero (the covariance is
positive semi-definite up to rounding). For a degenerate set whose largest
eigenvalue is zero (all points coincident) the ratio features are zero,
the normal is (0, 0, 1) by convention and the angle is zero.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

FEATURE_NAMES = (
    "linearity",
    "planarity",
    "sphericity",
    "omnivariance",
    "anisotropy",
    "eigenentropy",
    "eigen_sum",
    "curvature",
    "normal_angle",
    "goodness_of_fit",
    "roughness",
    "normal_x",
    "normal_y",
    "normal_z",
    "unevenness",
    "surface_density",
    "height_spread",
    "internal_density",
    "curvity",
    "volume",
    "point_count",
)

GEOM_DIM = len(FEATURE_NAMES)


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray     # (3,) descending, >= 0
    eigenvectors: np.ndarray    # (3, 3) columns matching eigenvalues
    normal: np.ndarray          # (3,) unit, z-component >= 0
    centroid: np.ndarray        # (3,)
    covariance: np.ndarray      # (3, 3)


class EigenFeatures(NamedTuple):
    linearity: float
    planarity: float
    sphericity: float
    omnivariance: float
    anisotropy: float
    eigenentropy: float
    eigen_sum: float
    curvature: float
    normal_angle: float
    goodness_of_fit: float
    roughness: float
    normal: np.ndarray
    unevenness: float
    surface_density: float


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"points must have shape (k, 3), got {pts.shape}")
    if len(pts) < 2:
        raise ValueError(f"need at least 2 points, got {len(pts)}")
    return pts


def eigen_decomposition(points) -> EigenDecomposition:
    """Eigenstructure of the mean-centered covariance of a point set."""
    pts = _as_points(points)
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    cov = centered.T @ centered / len(pts)
    evals, evecs = np.linalg.eigh(cov)
    if evals[0] < -1e-12:
        raise ValueError(f"covariance eigenvalue {evals[0]} below tolerance")
    evals = np.maximum(evals[::-1], 0.0)          # descending
    evecs = evecs[:, ::-1]
    normal = evecs[:, 2]
    if evals[0] == 0.0:
        normal = np.array([0.0, 0.0, 1.0])
    elif normal[2] < 0.0:
        normal = -normal
    return EigenDecomposition(evals, evecs, normal, centroid, cov)


def xy_diameter(points) -> float:
    """Largest pairwise distance of the points' ground-plane footprint."""
    pts = np.asarray(points, dtype=np.float64)
    xy = pts[:, :2]
    dx = xy[:, 0][:, None] - xy[:, 0][None, :]
    dy = xy[:, 1][:, None] - xy[:, 1][None, :]
    return float(np.sqrt((dx * dx + dy * dy).max()))


def eigen_features(points, min_xy_diameter: float = 0.0) -> EigenFeatures:
    """Covariance-eigenstructure feature block of one cell.

    ``min_xy_diameter`` floors the footprint diameter used by the surface
    density so sets narrower than the sub-cell size do not blow it up.
    """
    pts = _as_points(points)
    k = len(pts)
    dec = eigen_decomposition(pts)
    l1, l2, l3 = dec.eigenvalues
    total = l1 + l2 + l3

    if l1 > 0.0:
        linearity = (l1 - l2) / l1
        planarity = (l2 - l3) / l1
        sphericity = l3 / l1
        anisotropy = (l1 - l3) / l1
        curvature = l3 / total
        shares = dec.eigenvalues / total
        nz = shares[shares > 0.0]
        eigenentropy = float(-(nz * np.log(nz)).sum())
        angle = math.acos(min(dec.normal[2], 1.0))
    else:
        linearity = planarity = sphericity = anisotropy = 0.0
        curvature = eigenentropy = 0.0
        angle = 0.0

    omnivariance = float(np.cbrt(l1 * l2 * l3))
    roughness = float(dec.covariance[2, 2])
    unevenness = float(np.abs((pts - dec.centroid) @ dec.normal).mean())
    diameter = max(xy_diameter(pts), min_xy_diameter)
    surface_density = k / diameter ** 2 if diameter > 0.0 else 0.0

    return EigenFeatures(
        linearity=float(linearity),
        planarity=float(planarity),
        sphericity=float(sphericity),
        omnivariance=omnivariance,
        anisotropy=float(anisotropy),
        eigenentropy=float(eigenentropy),
        eigen_sum=float(total),
        curvature=float(curvature),
        normal_angle=float(angle),
        goodness_of_fit=float(l3),
        roughness=roughness,
        normal=dec.normal,
        unevenness=unevenness,
        surface_density=float(surface_density),
    )


def height_spread(points, plane_normal) -> float:
    """Elevation gap between the points extreme along the plane normal.

    Each point is projected onto the line through the origin with
    direction ``plane_normal``; the points whose projections have the
    highest and lowest z pick the result, which is the absolute difference
    of their raw z coordinates. Ties keep the earliest point.
    """
    pts = _as_points(points)
    v = np.asarray(plane_normal, dtype=np.float64).reshape(3)
    score = v[2] * (pts @ v)
    hi = int(np.argmax(score))
    lo = int(np.argmin(score))
    return float(abs(pts[hi, 2] - pts[lo, 2]))


def internal_density(points, resolution: float, internal_resolution: float) -> float:
    """Fraction of a cell's sub-cells that contain at least one point.

    The cell footprint is split into ``(resolution / internal_resolution)``
    sub-cells per side. Assumes the cell's minimum corner sits on a
    multiple of the resolution (true for world-aligned grids), so sub-cell
    membership reduces to modular arithmetic on the world coordinates.
    """
    pts = _as_points(points)
    per_side = int(round(resolution / internal_resolution))
    sub_col = np.floor(pts[:, 0] / internal_resolution).astype(np.int64) % per_side
    sub_row = np.floor(pts[:, 1] / internal_resolution).astype(np.int64) % per_side
    occupied = len(np.unique(sub_row * per_side + sub_col))
    return occupied / float(per_side * per_side)


def curvity(points, sensor_origin, bins: int, span: float) -> int:
    """Number of empty bins in the histogram of sensor distances.

    The histogram has ``bins`` equal-width bins over the fixed range
    ``[0, span]``; distances beyond the span land in the last bin.
    """
    pts = _as_points(points)
    origin = np.asarray(sensor_origin, dtype=np.float64).reshape(3)
    diff = pts - origin
    dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    width = span / bins
    idx = np.clip(np.floor(dist / width).astype(np.int64), 0, bins - 1)
    occupied = len(np.unique(idx))
    return int(bins - occupied)


def prism_volume(points, plane_normal) -> float:
    """Volume of the smallest upright box around the points.

    The base is the xy bounding rectangle; the height is the
    :func:`height_spread` along ``plane_normal``.
    """
    pts = _as_points(points)
    extent = pts[:, :2].max(axis=0) - pts[:, :2].min(axis=0)
    return float(extent[0] * extent[1] * height_spread(pts, plane_normal))


def cell_geometric_features(points, sensor_origin, config) -> np.ndarray:
    """Full 21-value geometric feature vector of one cell.

    ``config`` is a :class:`travgrid.grid.GridConfig`; it supplies the
    sub-cell size, the curvity bin count and the curvity span.
    """
    pts = _as_points(points)
    ef = eigen_features(pts, min_xy_diameter=config.internal_resolution)
    spread = height_spread(pts, ef.normal)
    extent = pts[:, :2].max(axis=0) - pts[:, :2].min(axis=0)
    return np.array([
        ef.linearity,
        ef.planarity,
        ef.sphericity,
        ef.omnivariance,
        ef.anisotropy,
        ef.eigenentropy,
        ef.eigen_sum,
        ef.curvature,
        ef.normal_angle,
        ef.goodness_of_fit,
        ef.roughness,
        ef.normal[0],
        ef.normal[1],
        ef.normal[2],
        ef.unevenness,
        ef.surface_density,
        spread,
        internal_density(pts, config.resolution, config.internal_resolution),
        float(curvity(pts, sensor_origin, config.curvity_bins, config.curvity_span)),
        extent[0] * extent[1] * spread,
        float(len(pts)),
    ])
