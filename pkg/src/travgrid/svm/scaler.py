"""Per-feature min-max scaling with clipped extrapolation."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin


class FeatureScaler(BaseEstimator, TransformerMixin):
    """Map each feature to [0, 1] over the training set.

    Constant features map to 0. Test-time values outside the training
    range are clipped to [clip_lo, clip_hi] after scaling, so a single
    wild feature cannot saturate an RBF kernel.
    """

    def __init__(self, clip_lo: float = -0.5, clip_hi: float = 1.5):
        self.clip_lo = clip_lo
        self.clip_hi = clip_hi

    def fit(self, x, y=None):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or len(x) == 0:
            raise ValueError("expected a non-empty 2-d feature array")
        self.data_min_ = x.min(axis=0)
        self.data_max_ = x.max(axis=0)
        self.range_ = self.data_max_ - self.data_min_
        self.n_features_in_ = x.shape[1]
        return self

    def transform(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} features, got {x.shape[1]}")
        safe = np.where(self.range_ == 0.0, 1.0, self.range_)
        scaled = (x - self.data_min_) / safe
        scaled[:, self.range_ == 0.0] = 0.0
        return np.clip(scaled, self.clip_lo, self.clip_hi)
