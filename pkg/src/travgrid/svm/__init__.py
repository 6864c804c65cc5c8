"""Kernel SVM: SMO trainer, scaling, model selection and serialization."""

from .classifier import KernelSvmClassifier
from .kernels import KERNELS, kernel_diagonal, kernel_matrix
from .model import FEATURE_MODES, TraversabilityModel
from .model_io import MAGIC, load_model, save_model
from .scaler import FeatureScaler
from .search import CvRow, SearchResult, TrainSettings, grid_search, stratified_folds
from .smo import SmoResult, dual_objective, kkt_violation, smo_solve

__all__ = [
    "CvRow",
    "FEATURE_MODES",
    "FeatureScaler",
    "KERNELS",
    "KernelSvmClassifier",
    "MAGIC",
    "SearchResult",
    "SmoResult",
    "TrainSettings",
    "TraversabilityModel",
    "dual_objective",
    "grid_search",
    "kernel_diagonal",
    "kernel_matrix",
    "kkt_violation",
    "load_model",
    "save_model",
    "smo_solve",
    "stratified_folds",
]
