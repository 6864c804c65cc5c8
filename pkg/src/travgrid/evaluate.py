"""Ground-truth extraction, scoring and latency measurement.

Positive class is traversable throughout. Cells whose ground truth is
unknown are excluded from scoring entirely; cells with a known ground
truth that the method leaves unpredicted are counted as UNK and included
in the accuracy denominator.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .cloud import FRAME_WORLD, PointCloud
from .exceptions import DataError
from .grid import NON_TRAVERSABLE, TRAVERSABLE, UNKNOWN, TraversabilityGrid

# SemanticKITTI ids for road, parking, sidewalk, other-ground, lane-marking.
DEFAULT_TRAVERSABLE_CLASSES = frozenset({40, 44, 48, 49, 60})

# Class 0 marks unlabeled points; they count toward nothing.
_UNLABELED = 0

_GROUND_NAMES = {"road", "parking", "sidewalk", "other-ground",
                 "other_ground", "lane-marking", "lane_marking"}


@dataclass(frozen=True)
class GroundTruthConfig:
    traversable_classes: frozenset[int] = DEFAULT_TRAVERSABLE_CLASSES
    min_points: int = 2
    nontrav_threshold: int = 2

    def __post_init__(self):
        if not self.traversable_classes:
            raise ValueError("traversable class set must be non-empty")
        if self.min_points < 1:
            raise ValueError("min_points must be at least 1")
        if self.nontrav_threshold < 1:
            raise ValueError("nontrav_threshold must be at least 1")


def validate_traversable_classes(class_ids, label_map_path) -> None:
    """Check configured ids against a dataset label-map YAML file.

    Every configured id must exist in the file's ``labels`` section and
    name a ground-like class. Raises DataError on any mismatch.
    """
    import yaml

    try:
        with open(label_map_path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise DataError(f"cannot read label map {label_map_path}: "
                        f"{exc}") from exc
    labels = doc.get("labels") if isinstance(doc, dict) else None
    if not isinstance(labels, dict):
        raise DataError(f"{label_map_path}: no 'labels' mapping found")
    for cid in sorted(class_ids):
        if cid not in labels:
            raise DataError(
                f"{label_map_path}: traversable class id {cid} is not in "
                f"the dataset label map")
        name = str(labels[cid]).strip().lower()
        if name not in _GROUND_NAMES:
            raise DataError(
                f"{label_map_path}: class id {cid} maps to {name!r}, "
                f"which is not a ground-like class")


def cell_ground_truth(point_classes, cfg: GroundTruthConfig) -> int:
    """Label one cell from the semantic classes of its points."""
    classes = np.asarray(point_classes)
    labeled = classes[classes != _UNLABELED]
    if len(labeled) < cfg.min_points:
        return UNKNOWN
    trav_ids = np.array(sorted(cfg.traversable_classes), dtype=classes.dtype)
    bad = np.count_nonzero(~np.isin(labeled, trav_ids))
    if bad >= cfg.nontrav_threshold:
        return NON_TRAVERSABLE
    return TRAVERSABLE


def grid_ground_truth(grid: TraversabilityGrid, cloud: PointCloud,
                      cfg: GroundTruthConfig) -> np.ndarray:
    """Ground-truth labels for every cell of the grid at once."""
    if cloud.frame != FRAME_WORLD:
        raise ValueError("ground truth needs the world-frame cloud")
    classes = cloud.semantic_class[grid.point_order]
    trav_ids = np.array(sorted(cfg.traversable_classes), dtype=classes.dtype)
    labeled = (classes != _UNLABELED).astype(np.int64)
    bad = (labeled.astype(bool)
           & ~np.isin(classes, trav_ids)).astype(np.int64)

    bounds = grid.cell_starts
    # reduceat needs non-empty input; pad so empty grids still work.
    if len(classes) == 0:
        labeled_per_cell = np.zeros(grid.num_cells, dtype=np.int64)
        bad_per_cell = labeled_per_cell
    else:
        cum_labeled = np.concatenate([[0], np.cumsum(labeled)])
        cum_bad = np.concatenate([[0], np.cumsum(bad)])
        labeled_per_cell = cum_labeled[bounds[1:]] - cum_labeled[bounds[:-1]]
        bad_per_cell = cum_bad[bounds[1:]] - cum_bad[bounds[:-1]]

    labels = np.full(grid.num_cells, UNKNOWN, dtype=np.int8)
    known = labeled_per_cell >= cfg.min_points
    labels[known] = TRAVERSABLE
    labels[known & (bad_per_cell >= cfg.nontrav_threshold)] = NON_TRAVERSABLE
    return labels.reshape(grid.size, grid.size)


@dataclass
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0
    unk: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn + self.unk

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.tn + other.tn,
                               self.fp + other.fp, self.fn + other.fn,
                               self.unk + other.unk)


def score(gt_labels: np.ndarray, pred_labels: np.ndarray) -> ConfusionCounts:
    """Tally a prediction grid against ground truth."""
    gt = np.asarray(gt_labels)
    pred = np.asarray(pred_labels)
    if gt.shape != pred.shape:
        raise ValueError(f"shape mismatch: {gt.shape} vs {pred.shape}")
    known = gt != UNKNOWN
    gt_t = gt == TRAVERSABLE
    pred_t = pred == TRAVERSABLE
    pred_n = pred == NON_TRAVERSABLE
    return ConfusionCounts(
        tp=int(np.count_nonzero(known & gt_t & pred_t)),
        tn=int(np.count_nonzero(known & ~gt_t & pred_n)),
        fp=int(np.count_nonzero(known & ~gt_t & pred_t)),
        fn=int(np.count_nonzero(known & gt_t & pred_n)),
        unk=int(np.count_nonzero(known & (pred == UNKNOWN))),
    )


def _ratio(num: int, den: int) -> float | None:
    return num / den if den > 0 else None


def metrics(counts: ConfusionCounts) -> dict[str, float | None]:
    """Scores from a confusion tally; undefined values are None.

    Rates appear twice: divided by TOT (suffix ``_tot``) and normalized
    per class (plain names), where TPR + FNR = 1 and TNR + FPR = 1.
    """
    tp, tn, fp, fn, unk = (counts.tp, counts.tn, counts.fp, counts.fn,
                           counts.unk)
    tot = counts.total
    iou_pos = _ratio(tp, tp + fp + fn)
    iou_neg = _ratio(tn, tn + fp + fn)
    miou = (0.5 * (iou_pos + iou_neg)
            if iou_pos is not None and iou_neg is not None else None)
    return {
        "accuracy": _ratio(tp + tn, tot),
        "f1": _ratio(2 * tp, 2 * tp + fp + fn),
        "iou": iou_pos,
        "iou_negative": iou_neg,
        "miou": miou,
        "tpr": _ratio(tp, tp + fn),
        "fnr": _ratio(fn, tp + fn),
        "tnr": _ratio(tn, tn + fp),
        "fpr": _ratio(fp, tn + fp),
        "tpr_tot": _ratio(tp, tot),
        "fnr_tot": _ratio(fn, tot),
        "tnr_tot": _ratio(tn, tot),
        "fpr_tot": _ratio(fp, tot),
        "unk_tot": _ratio(unk, tot),
    }


METRIC_KEYS = ("accuracy", "f1", "iou", "iou_negative", "miou", "tpr",
               "fnr", "tnr", "fpr", "tpr_tot", "fnr_tot", "tnr_tot",
               "fpr_tot", "unk_tot")

# Stage names in pipeline order; the recorder accepts any name, these are
# the ones the pipeline emits.
PIPELINE_STAGES = ("integration", "grid", "geometric", "appearance",
                   "prediction", "filter")


class LatencyRecorder:
    """Wall-clock time per stage per frame, reported in milliseconds."""

    def __init__(self):
        self._samples: dict[str, list[float]] = {}

    @contextmanager
    def timed(self, stage: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.record(stage, time.perf_counter() - start)

    def record(self, stage: str, seconds: float) -> None:
        self._samples.setdefault(stage, []).append(seconds)

    def stages(self) -> list[str]:
        return list(self._samples)

    def stats(self, stage: str) -> tuple[float, float, int]:
        """(mean_ms, max_ms, frames) for one stage."""
        samples = self._samples.get(stage)
        if not samples:
            return 0.0, 0.0, 0
        ms = [s * 1000.0 for s in samples]
        return sum(ms) / len(ms), max(ms), len(ms)

    def frame_totals(self) -> list[float]:
        """Per-frame total milliseconds, summed across stages."""
        lengths = {len(v) for v in self._samples.values()}
        n = max(lengths) if lengths else 0
        totals = [0.0] * n
        for samples in self._samples.values():
            for i, s in enumerate(samples):
                totals[i] += s * 1000.0
        return totals


@dataclass
class EvalReport:
    counts: ConfusionCounts
    scores: dict[str, float | None]
    per_frame: list[tuple[int, ConfusionCounts]] = field(default_factory=list)
    latency_mean_ms: float | None = None
    latency_max_ms: float | None = None
    stage_latency: list[tuple[str, float, float]] = field(default_factory=list)


def build_report(per_frame: list[tuple[int, ConfusionCounts]],
                 recorder: LatencyRecorder | None = None) -> EvalReport:
    total = ConfusionCounts()
    for _, c in per_frame:
        total = total + c
    report = EvalReport(counts=total, scores=metrics(total),
                        per_frame=list(per_frame))
    if recorder is not None:
        totals = recorder.frame_totals()
        if totals:
            report.latency_mean_ms = sum(totals) / len(totals)
            report.latency_max_ms = max(totals)
        report.stage_latency = [
            (stage, *recorder.stats(stage)[:2]) for stage in recorder.stages()]
    return report
