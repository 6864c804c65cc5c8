"""Binary kernel SVM classifier on top of the SMO solver."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .kernels import KERNELS, kernel_matrix
from .smo import smo_solve


class KernelSvmClassifier(BaseEstimator, ClassifierMixin):
    """Soft-margin SVM for labels in {-1, +1}.

    Fitting runs the in-package SMO solver; prediction uses the stored
    support vectors only. Ties at decision value 0 go to the positive
    class.

    Attributes set by :meth:`fit`: ``support_`` (training indices),
    ``support_vectors_``, ``dual_coef_`` (alpha_i * y_i, shape (1, n_sv)),
    ``intercept_``, ``n_iter_``, ``converged_``, ``dual_objective_`` and,
    with ``track_objective``, ``objective_history_``.
    """

    def __init__(self, c: float = 1.0, kernel: str = "rbf",
                 gamma: float = 0.1, degree: int = 3, coef0: float = 0.0,
                 tol: float = 1e-3, max_iter: int = 100_000,
                 pos_weight: float = 1.0, cache_columns: int = 4096,
                 track_objective: bool = False):
        self.c = c
        self.kernel = kernel
        self.gamma = gamma
        self.degree = degree
        self.coef0 = coef0
        self.tol = tol
        self.max_iter = max_iter
        self.pos_weight = pos_weight
        self.cache_columns = cache_columns
        self.track_objective = track_objective

    def fit(self, x, y):
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.c <= 0.0:
            raise ValueError("c must be positive")
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        result = smo_solve(
            x, y, self.c, kernel=self.kernel, gamma=self.gamma,
            degree=self.degree, coef0=self.coef0, tol=self.tol,
            max_iter=self.max_iter, pos_weight=self.pos_weight,
            cache_columns=self.cache_columns,
            track_objective=self.track_objective)
        sv = result.alpha > 0.0
        self.support_ = np.flatnonzero(sv)
        self.support_vectors_ = x[sv].copy()
        self.dual_coef_ = (result.alpha[sv] * y[sv])[None, :]
        self.intercept_ = result.bias
        self.n_iter_ = result.iterations
        self.converged_ = result.converged
        self.dual_objective_ = result.objective
        if self.track_objective:
            self.objective_history_ = result.objective_history
        self.classes_ = np.array([-1.0, 1.0])
        self.n_features_in_ = x.shape[1]
        return self

    def decision_function(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} features, got {x.shape[1]}")
        k = kernel_matrix(x, self.support_vectors_, self.kernel,
                          self.gamma, self.degree, self.coef0)
        return k @ self.dual_coef_[0] + self.intercept_

    def predict(self, x):
        return np.where(self.decision_function(x) >= 0.0, 1.0, -1.0)
