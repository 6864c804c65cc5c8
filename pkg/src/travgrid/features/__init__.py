"""Per-cell feature extraction: geometry from points, appearance from images."""

from .appearance import (
    ColorStore,
    HsvHistogram,
    cell_prism,
    convex_hull_2d,
    frame_appearance_counts,
    grid_cell_keys,
    hsv_histogram,
    polygon_pixels,
    project_prism,
    propagate_colors,
    rgb_to_hsv_255,
)
from .geometric import (
    FEATURE_NAMES,
    GEOM_DIM,
    cell_geometric_features,
    eigen_decomposition,
    eigen_features,
)
from .geometric_batch import CellGeometry, frame_geometric_features


def feature_names(hsv_bins=None) -> tuple[str, ...]:
    """Column names of the assembled feature vector.

    With ``hsv_bins`` the geometric names are followed by one name per
    histogram bucket (``h00``, ..., ``s00``, ..., ``v00``, ...).
    """
    names = list(FEATURE_NAMES)
    if hsv_bins is not None:
        for prefix, nb in zip("hsv", hsv_bins):
            names.extend(f"{prefix}{i:02d}" for i in range(nb))
    return tuple(names)


def feature_dim(hsv_bins=None) -> int:
    return GEOM_DIM + (int(sum(hsv_bins)) if hsv_bins is not None else 0)


__all__ = [
    "CellGeometry",
    "ColorStore",
    "FEATURE_NAMES",
    "GEOM_DIM",
    "HsvHistogram",
    "cell_geometric_features",
    "cell_prism",
    "convex_hull_2d",
    "eigen_decomposition",
    "eigen_features",
    "feature_dim",
    "feature_names",
    "frame_appearance_counts",
    "frame_geometric_features",
    "grid_cell_keys",
    "hsv_histogram",
    "polygon_pixels",
    "project_prism",
    "propagate_colors",
    "rgb_to_hsv_255",
]
