"""Appearance features: cell prisms, image projection, HSV histograms.

Each cell with enough points gets an upright prism (xy bounding box at the
lowest point, height equal to the cell's height spread). The prism's eight
vertices are projected into the current camera image; if any lands inside,
the clamped convex hull of the projections is rasterized and every interior
pixel votes into per-channel HSV histograms. Counts accumulate across
frames in a world-keyed store, so a cell keeps its appearance after the
camera has moved past it.

HSV channels are scaled to [0, 255] and quantized with
``floor(value * buckets / 256)``; each channel histogram is normalized by
the cell's total pixel votes.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..camera import project_world_points
from .geometric import eigen_decomposition, height_spread

# Vertex order: bottom face counter-clockwise, then top face counter-clockwise.
_CORNERS = np.array([(0, 0), (1, 0), (1, 1), (0, 1)], dtype=np.float64)


class HsvHistogram(NamedTuple):
    h: np.ndarray
    s: np.ndarray
    v: np.ndarray
    vote_count: int

    def concatenated(self) -> np.ndarray:
        return np.concatenate([self.h, self.s, self.v])


# --- prism geometry -----------------------------------------------------------

def prism_vertices(bbox_min, bbox_max, z_min: float, height: float) -> np.ndarray:
    """Eight prism corners: bottom ring then top ring, both CCW."""
    bbox_min = np.asarray(bbox_min, dtype=np.float64)
    bbox_max = np.asarray(bbox_max, dtype=np.float64)
    xy = bbox_min + _CORNERS * (bbox_max - bbox_min)
    verts = np.empty((8, 3))
    verts[:4, :2] = xy
    verts[4:, :2] = xy
    verts[:4, 2] = z_min
    verts[4:, 2] = z_min + height
    return verts


def cell_prism(points) -> np.ndarray:
    """Bounding prism of one cell's points; height is the height spread."""
    pts = np.asarray(points, dtype=np.float64)
    normal = eigen_decomposition(pts).normal
    spread = height_spread(pts, normal)
    return prism_vertices(pts[:, :2].min(axis=0), pts[:, :2].max(axis=0),
                          pts[:, 2].min(), spread)


# --- convex hull ---------------------------------------------------------------

def convex_hull_2d(points: np.ndarray) -> np.ndarray:
    """Convex hull in counter-clockwise order (monotone chain).

    Collinear boundary points are dropped. Degenerate inputs may yield
    fewer than 3 vertices.
    """
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if len(pts) <= 2:
        return pts
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def half(seq):
        chain = []
        for p in seq:
            while len(chain) >= 2:
                a, b = chain[-2], chain[-1]
                if (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) <= 0:
                    chain.pop()
                else:
                    break
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(pts[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    return hull


def project_prism(vertices, camera, lidar_pose):
    """Project prism corners into the image; None when fully outside.

    Corners behind the camera are discarded. If at least one projected
    corner lies inside the image, the remaining corners are clamped to the
    image borders and their 2D convex hull is returned.
    """
    uv, depth = project_world_points(camera, lidar_pose, np.asarray(vertices, float))
    uv = uv[depth > 0.0]
    if len(uv) == 0:
        return None
    max_x = camera.width - 1.0
    max_y = camera.height - 1.0
    inside = ((uv[:, 0] >= 0.0) & (uv[:, 0] <= max_x) &
              (uv[:, 1] >= 0.0) & (uv[:, 1] <= max_y))
    if not inside.any():
        return None
    clamped = np.column_stack([np.clip(uv[:, 0], 0.0, max_x),
                               np.clip(uv[:, 1], 0.0, max_y)])
    return convex_hull_2d(clamped)


# --- rasterization -------------------------------------------------------------

def polygon_pixel_spans(polygon, width: int, height: int):
    """Scanline spans of a convex polygon's interior pixels.

    Pixels are sampled at integer coordinates; boundary pixels count as
    interior. Returns ``(ys, x_starts, x_ends)`` with inclusive ends.
    """
    poly = np.asarray(polygon, dtype=np.float64)
    if len(poly) < 3:
        return (np.zeros(0, dtype=np.int64),) * 3
    y0 = max(int(np.ceil(poly[:, 1].min())), 0)
    y1 = min(int(np.floor(poly[:, 1].max())), height - 1)
    if y1 < y0:
        return (np.zeros(0, dtype=np.int64),) * 3

    a = poly
    b = np.roll(poly, -1, axis=0)
    rows = np.arange(y0, y1 + 1, dtype=np.float64)
    ylo = np.minimum(a[:, 1], b[:, 1])
    yhi = np.maximum(a[:, 1], b[:, 1])
    hits = (rows[:, None] >= ylo[None, :]) & (rows[:, None] <= yhi[None, :])
    dy = b[:, 1] - a[:, 1]
    dy_safe = np.where(dy == 0.0, 1.0, dy)
    t = (rows[:, None] - a[None, :, 1]) / dy_safe[None, :]
    x_at = a[None, :, 0] + t * (b[:, 0] - a[:, 0])[None, :]
    # Horizontal edges contribute both endpoints.
    horiz = dy == 0.0
    x_lo = np.where(horiz[None, :], np.minimum(a[:, 0], b[:, 0])[None, :], x_at)
    x_hi = np.where(horiz[None, :], np.maximum(a[:, 0], b[:, 0])[None, :], x_at)
    x_min = np.where(hits, x_lo, np.inf).min(axis=1)
    x_max = np.where(hits, x_hi, -np.inf).max(axis=1)

    valid = x_min <= x_max
    xs = np.maximum(np.ceil(x_min), 0.0)
    xe = np.minimum(np.floor(x_max), width - 1.0)
    valid &= xs <= xe
    ys = np.arange(y0, y1 + 1, dtype=np.int64)[valid]
    return ys, xs[valid].astype(np.int64), xe[valid].astype(np.int64)


def polygon_pixels(polygon, width: int, height: int):
    """Interior pixel coordinates ``(xs, ys)`` of a convex polygon."""
    ys, x0, x1 = polygon_pixel_spans(polygon, width, height)
    return expand_spans(ys, x0, x1)


def expand_spans(ys, x0, x1):
    counts = (x1 - x0 + 1).astype(np.int64)
    total = int(counts.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(counts)])[:-1]
    xs = np.arange(total, dtype=np.int64) - np.repeat(offsets, counts) \
        + np.repeat(x0, counts)
    return xs, np.repeat(ys, counts)


# --- HSV quantization ----------------------------------------------------------

def rgb_to_hsv_255(rgb: np.ndarray) -> np.ndarray:
    """Convert (n, 3) uint8 RGB to HSV with each channel in [0, 255].

    Mirrors the arithmetic of :func:`colorsys.rgb_to_hsv` element-wise so
    quantized bucket indices are reproducible against it.
    """
    rgb = np.asarray(rgb, dtype=np.float64) / 255.0
    r, g, b = rgb[:, 0], rgb[:, 1], rgb[:, 2]
    maxc = np.maximum(np.maximum(r, g), b)
    minc = np.minimum(np.minimum(r, g), b)
    rangec = maxc - minc
    gray = rangec == 0.0
    range_safe = np.where(gray, 1.0, rangec)
    max_safe = np.where(maxc == 0.0, 1.0, maxc)
    s = np.where(gray, 0.0, rangec / max_safe)
    rc = (maxc - r) / range_safe
    gc = (maxc - g) / range_safe
    bc = (maxc - b) / range_safe
    h = np.select([r == maxc, g == maxc], [bc - gc, 2.0 + rc - bc], 4.0 + gc - rc)
    h = (h / 6.0) % 1.0
    h = np.where(gray, 0.0, h)
    return np.stack([h, s, maxc], axis=1) * 255.0


def hsv_bucket_indices(hsv255: np.ndarray, hsv_bins) -> np.ndarray:
    """Per-channel bucket index: floor(value * buckets / 256)."""
    bins = np.asarray(hsv_bins, dtype=np.float64)
    idx = np.floor(hsv255 * bins / 256.0).astype(np.int64)
    return np.clip(idx, 0, np.asarray(hsv_bins, dtype=np.int64) - 1)


def hsv_pixel_counts(polygon, image, hsv_bins):
    """Raw per-channel bucket counts of a polygon's interior pixels."""
    hb, sb, vb = hsv_bins
    xs, ys = polygon_pixels(polygon, image.width, image.height)
    if len(xs) == 0:
        return np.zeros(hb + sb + vb, dtype=np.int64), 0
    rgb = image.pixels[ys, xs].reshape(-1, 3)
    idx = hsv_bucket_indices(rgb_to_hsv_255(rgb), hsv_bins)
    counts = np.concatenate([
        np.bincount(idx[:, 0], minlength=hb),
        np.bincount(idx[:, 1], minlength=sb),
        np.bincount(idx[:, 2], minlength=vb),
    ])
    return counts, len(xs)


def normalize_counts(counts: np.ndarray, votes: int, hsv_bins) -> HsvHistogram:
    hb, sb, vb = hsv_bins
    scale = float(votes) if votes > 0 else 1.0
    values = counts.astype(np.float64) / scale
    return HsvHistogram(values[:hb], values[hb:hb + sb], values[hb + sb:],
                        int(votes))


def hsv_histogram(polygon, image, hsv_bins) -> HsvHistogram:
    """Normalized HSV histograms of the pixels inside ``polygon``."""
    counts, votes = hsv_pixel_counts(polygon, image, hsv_bins)
    return normalize_counts(counts, votes, hsv_bins)


# --- cross-frame propagation ----------------------------------------------------

class ColorStore:
    """Accumulated per-cell HSV vote counts, keyed by world cell.

    Keys are world-quantized (col, row) pairs, so the same patch of ground
    maps to the same entry as the grid re-centers. Counts are raw pixel
    votes; merge order does not matter.
    """

    def __init__(self, hsv_bins):
        self.hsv_bins = tuple(hsv_bins)
        self.dim = int(sum(hsv_bins))
        self._counts: dict[tuple[int, int], np.ndarray] = {}
        self._votes: dict[tuple[int, int], int] = {}

    def __len__(self) -> int:
        return len(self._counts)

    def add(self, key, counts: np.ndarray, votes: int) -> None:
        if votes <= 0:
            return
        entry = self._counts.get(key)
        if entry is None:
            self._counts[key] = counts.astype(np.int64, copy=True)
            self._votes[key] = int(votes)
        else:
            entry += counts
            self._votes[key] += int(votes)

    def votes(self, key) -> int:
        return self._votes.get(key, 0)

    def histogram(self, key) -> HsvHistogram:
        counts = self._counts.get(key)
        if counts is None:
            counts = np.zeros(self.dim, dtype=np.int64)
        return normalize_counts(counts, self._votes.get(key, 0), self.hsv_bins)

    def normalized_block(self, keys) -> np.ndarray:
        """Stacked normalized histograms for a list of keys."""
        out = np.zeros((len(keys), self.dim))
        for i, key in enumerate(keys):
            votes = self._votes.get(key, 0)
            if votes > 0:
                out[i] = self._counts[key] / float(votes)
        return out


def grid_cell_keys(grid, flat_ids) -> list[tuple[int, int]]:
    """World-quantized store keys for the given flat cell ids."""
    base_col, base_row = grid.origin_cell
    rows, cols = np.divmod(np.asarray(flat_ids, dtype=np.int64), grid.size)
    return [(int(base_col + c), int(base_row + r)) for c, r in zip(cols, rows)]


def frame_appearance_counts(geometry, camera, lidar_pose, image, hsv_bins):
    """Project every cell prism of one frame and tally HSV votes.

    ``geometry`` is the :class:`CellGeometry` of the frame. Returns raw
    ``(counts, votes)`` arrays aligned with ``geometry.flat_ids``; cells
    whose prism misses the image get zero votes.
    """
    m = len(geometry)
    hb, sb, vb = hsv_bins
    dim = hb + sb + vb
    counts = np.zeros((m, dim), dtype=np.int64)
    votes = np.zeros(m, dtype=np.int64)
    if m == 0:
        return counts, votes

    # Project all prism corners in one pass.
    verts = np.empty((m, 8, 3))
    for i in range(m):
        verts[i] = prism_vertices(geometry.bbox_min[i], geometry.bbox_max[i],
                                  geometry.z_min[i], geometry.height_spread[i])
    uv, depth = project_world_points(camera, lidar_pose, verts.reshape(-1, 3))
    uv = uv.reshape(m, 8, 2)
    depth = depth.reshape(m, 8)

    max_x = camera.width - 1.0
    max_y = camera.height - 1.0
    in_front = depth > 0.0
    inside = (in_front &
              (uv[:, :, 0] >= 0.0) & (uv[:, :, 0] <= max_x) &
              (uv[:, :, 1] >= 0.0) & (uv[:, :, 1] <= max_y))
    visible = np.flatnonzero(inside.any(axis=1))

    span_cell = []
    span_y = []
    span_x0 = []
    span_x1 = []
    for i in visible:
        pts = uv[i][in_front[i]]
        poly = convex_hull_2d(np.column_stack([
            np.clip(pts[:, 0], 0.0, max_x),
            np.clip(pts[:, 1], 0.0, max_y),
        ]))
        ys, x0, x1 = polygon_pixel_spans(poly, camera.width, camera.height)
        if len(ys) == 0:
            continue
        span_cell.append(np.full(len(ys), i, dtype=np.int64))
        span_y.append(ys)
        span_x0.append(x0)
        span_x1.append(x1)
    if not span_cell:
        return counts, votes

    cell_of_span = np.concatenate(span_cell)
    ys = np.concatenate(span_y)
    x0 = np.concatenate(span_x0)
    x1 = np.concatenate(span_x1)
    n_px = (x1 - x0 + 1).astype(np.int64)
    xs, yrep = expand_spans(ys, x0, x1)
    cell_of_px = np.repeat(cell_of_span, n_px)

    rgb = image.pixels[yrep, xs].reshape(-1, 3)
    idx = hsv_bucket_indices(rgb_to_hsv_255(rgb), hsv_bins)
    counts[:, :hb] = np.bincount(cell_of_px * hb + idx[:, 0],
                                 minlength=m * hb).reshape(m, hb)
    counts[:, hb:hb + sb] = np.bincount(cell_of_px * sb + idx[:, 1],
                                        minlength=m * sb).reshape(m, sb)
    counts[:, hb + sb:] = np.bincount(cell_of_px * vb + idx[:, 2],
                                      minlength=m * vb).reshape(m, vb)
    votes = np.bincount(cell_of_px, minlength=m)
    return counts, votes


def propagate_colors(store: ColorStore, grid, geometry, counts, votes) -> np.ndarray:
    """Merge one frame's counts into the store and return the features.

    The returned block holds, for each cell of ``geometry``, the
    accumulated normalized histograms (H, S and V concatenated).
    """
    keys = grid_cell_keys(grid, geometry.flat_ids)
    for i, key in enumerate(keys):
        store.add(key, counts[i], int(votes[i]))
    return store.normalized_block(keys)
