"""Cross-validated grid search over (C, gamma) for the RBF model."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classifier import KernelSvmClassifier
from .scaler import FeatureScaler


@dataclass(frozen=True)
class TrainSettings:
    c_grid: tuple[float, ...] = (0.1, 1.0, 10.0, 100.0)
    gamma_grid: tuple[float, ...] = (0.01, 0.1, 1.0, 10.0)
    folds: int = 5
    tolerance: float = 1e-3
    max_passes: int = 100_000
    seed: int = 0
    pos_weight: float = 1.0
    kernel: str = "rbf"

    def __post_init__(self):
        if not self.c_grid or not self.gamma_grid:
            raise ValueError("parameter grids must be non-empty")
        if self.folds < 2:
            raise ValueError("cross-validation needs at least 2 folds")


@dataclass
class CvRow:
    c: float
    gamma: float
    mean_accuracy: float
    fold_accuracies: list[float] = field(default_factory=list)


@dataclass
class SearchResult:
    classifier: KernelSvmClassifier
    scaler: FeatureScaler
    best_c: float
    best_gamma: float
    best_accuracy: float
    rows: list[CvRow]


def stratified_folds(y, folds: int, seed: int) -> list[np.ndarray]:
    """Validation index sets: shuffle within class, deal round-robin."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    buckets: list[list[int]] = [[] for _ in range(folds)]
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        if len(members) < folds:
            raise ValueError(
                f"class {cls} has {len(members)} samples, fewer than "
                f"{folds} folds")
        for pos, idx in enumerate(rng.permutation(members)):
            buckets[pos % folds].append(int(idx))
    return [np.sort(np.array(b, dtype=np.int64)) for b in buckets]


def _fit_one(x_train, y_train, c, gamma, settings) -> tuple:
    scaler = FeatureScaler().fit(x_train)
    clf = KernelSvmClassifier(
        c=c, kernel=settings.kernel, gamma=gamma, tol=settings.tolerance,
        max_iter=settings.max_passes, pos_weight=settings.pos_weight)
    clf.fit(scaler.transform(x_train), y_train)
    return scaler, clf


def grid_search(x, y, settings: TrainSettings = TrainSettings()) -> SearchResult:
    """Pick (C, gamma) by mean CV accuracy, retrain on the full set.

    The grids are scanned in ascending order and a candidate replaces the
    incumbent only on strictly better accuracy, so ties resolve to the
    smallest C, then the smallest gamma.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    val_sets = stratified_folds(y, settings.folds, settings.seed)
    all_idx = np.arange(len(y))
    splits = [(np.setdiff1d(all_idx, val, assume_unique=True), val)
              for val in val_sets]

    rows: list[CvRow] = []
    best: tuple[float, float, float] | None = None
    for c in sorted(settings.c_grid):
        for gamma in sorted(settings.gamma_grid):
            accs = []
            for train_idx, val_idx in splits:
                scaler, clf = _fit_one(x[train_idx], y[train_idx],
                                       c, gamma, settings)
                pred = clf.predict(scaler.transform(x[val_idx]))
                accs.append(float(np.mean(pred == y[val_idx])))
            mean_acc = float(np.mean(accs))
            rows.append(CvRow(c=c, gamma=gamma, mean_accuracy=mean_acc,
                              fold_accuracies=accs))
            if best is None or mean_acc > best[0]:
                best = (mean_acc, c, gamma)

    acc, c, gamma = best
    scaler, clf = _fit_one(x, y, c, gamma, settings)
    return SearchResult(classifier=clf, scaler=scaler, best_c=c,
                        best_gamma=gamma, best_accuracy=acc, rows=rows)
