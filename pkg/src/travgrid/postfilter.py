"""Weighted majority-vote smoothing of the predicted grid.

Each predictable cell casts w votes for its own label; every predictable
8-neighbor adds one vote for its label. The filtered label is the
majority, with ties keeping the cell's own label. All output labels are
computed from the input labels alone (a single pass, no cascading), and
unpredictable cells stay unknown.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .grid import NON_TRAVERSABLE, TRAVERSABLE, UNKNOWN, TraversabilityGrid

_SHIFTS = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1)
           if (dr, dc) != (0, 0)]


def _neighbor_sum(mask: np.ndarray) -> np.ndarray:
    """Count of True 8-neighbors per cell."""
    padded = np.pad(mask.astype(np.int32), 1)
    h, w = mask.shape
    total = np.zeros((h, w), dtype=np.int32)
    for dr, dc in _SHIFTS:
        total += padded[1 + dr:1 + dr + h, 1 + dc:1 + dc + w]
    return total


def filter_labels(labels: np.ndarray, predictable: np.ndarray,
                  weight: int) -> np.ndarray:
    """One smoothing pass over a 2-d label array."""
    if weight < 1:
        raise ValueError("filter weight must be at least 1")
    labels = np.asarray(labels)
    predictable = np.asarray(predictable, dtype=bool)
    if labels.shape != predictable.shape:
        raise ValueError("label/predictable shape mismatch")

    is_t = predictable & (labels == TRAVERSABLE)
    is_n = predictable & (labels == NON_TRAVERSABLE)
    votes_t = _neighbor_sum(is_t) + weight * is_t
    votes_n = _neighbor_sum(is_n) + weight * is_n

    out = np.full(labels.shape, UNKNOWN, dtype=np.int8)
    out[predictable] = labels[predictable]
    out[predictable & (votes_t > votes_n)] = TRAVERSABLE
    out[predictable & (votes_n > votes_t)] = NON_TRAVERSABLE
    return out


def filter_grid(grid: TraversabilityGrid,
                weight: int = 3) -> TraversabilityGrid:
    """Grid copy with ``filtered`` computed from ``predicted``."""
    filtered = filter_labels(grid.predicted, grid.predictable, weight)
    return dataclasses.replace(grid, filtered=filtered)
