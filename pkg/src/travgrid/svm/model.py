"""Trained model container used by the pipeline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..grid import NON_TRAVERSABLE, TRAVERSABLE
from .classifier import KernelSvmClassifier
from .scaler import FeatureScaler

FEATURE_MODES = ("hybrid", "geometric_only")


@dataclass
class TraversabilityModel:
    """Everything needed to label raw cell feature vectors.

    Support vectors are stored in scaled space; ``decision_values``
    applies the scaling to raw input internally.
    """

    kernel: str
    gamma: float
    degree: int
    coef0: float
    bias: float
    dual_coef: np.ndarray
    support_vectors: np.ndarray
    scaler_min: np.ndarray
    scaler_max: np.ndarray
    feature_mode: str
    hsv_bins: tuple[int, int, int] | None

    def __post_init__(self):
        if self.feature_mode not in FEATURE_MODES:
            raise ValueError(f"unknown feature mode {self.feature_mode!r}")
        if len(self.dual_coef) != len(self.support_vectors):
            raise ValueError("dual coefficient / support vector mismatch")
        if len(self.support_vectors) == 0:
            raise ValueError("model has no support vectors")
        if np.any(self.scaler_max < self.scaler_min):
            raise ValueError("scaling max below min")

    @property
    def dim(self) -> int:
        return self.support_vectors.shape[1]

    @property
    def n_support(self) -> int:
        return len(self.support_vectors)

    @classmethod
    def from_fit(cls, classifier: KernelSvmClassifier, scaler: FeatureScaler,
                 feature_mode: str, hsv_bins=None) -> "TraversabilityModel":
        return cls(
            kernel=classifier.kernel,
            gamma=float(classifier.gamma),
            degree=int(classifier.degree),
            coef0=float(classifier.coef0),
            bias=float(classifier.intercept_),
            dual_coef=classifier.dual_coef_[0].copy(),
            support_vectors=classifier.support_vectors_.copy(),
            scaler_min=scaler.data_min_.copy(),
            scaler_max=scaler.data_max_.copy(),
            feature_mode=feature_mode,
            hsv_bins=tuple(hsv_bins) if hsv_bins is not None else None,
        )

    def scaler(self) -> FeatureScaler:
        s = FeatureScaler()
        s.data_min_ = self.scaler_min.copy()
        s.data_max_ = self.scaler_max.copy()
        s.range_ = s.data_max_ - s.data_min_
        s.n_features_in_ = self.dim
        return s

    def classifier(self) -> KernelSvmClassifier:
        clf = KernelSvmClassifier(kernel=self.kernel, gamma=self.gamma,
                                  degree=self.degree, coef0=self.coef0)
        clf.support_vectors_ = self.support_vectors.copy()
        clf.dual_coef_ = self.dual_coef[None, :].copy()
        clf.intercept_ = self.bias
        clf.classes_ = np.array([-1.0, 1.0])
        clf.n_features_in_ = self.dim
        return clf

    def decision_values(self, raw_features) -> np.ndarray:
        scaled = self.scaler().transform(raw_features)
        return self.classifier().decision_function(scaled)

    def predict_labels(self, raw_features) -> np.ndarray:
        """Grid labels: traversable where the decision value is >= 0."""
        decisions = self.decision_values(raw_features)
        return np.where(decisions >= 0.0, TRAVERSABLE,
                        NON_TRAVERSABLE).astype(np.int8)
