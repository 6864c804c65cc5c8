"""On-disk artifact formats: label grids, feature tables, rasters, reports.

All text artifacts are plain ASCII, deterministic, and carry enough
header information to be re-read without the producing config.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..evaluate import METRIC_KEYS, ConfusionCounts, EvalReport
from ..exceptions import DataError
from ..grid import LABEL_NAMES, NAME_LABELS, UNKNOWN, TraversabilityGrid
from .images import RgbImage, write_image

_LABEL_HEADER = "# travgrid labels"

# Raster palette: traversable, non-traversable, unknown/unpredictable.
_WHITE = (255, 255, 255)
_RED = (220, 40, 40)
_GRAY = (128, 128, 128)


# --- per-frame label grids ------------------------------------------------------

def write_label_grid(path, grid: TraversabilityGrid,
                     labels: np.ndarray) -> None:
    """Write known cells as ``row col NAME`` lines; unknown cells are omitted."""
    base_col, base_row = grid.origin_cell
    lines = [
        f"{_LABEL_HEADER} frame={grid.frame_index} size={grid.size} "
        f"resolution={grid.resolution!r} origin_col={base_col} "
        f"origin_row={base_row}"
    ]
    rows, cols = np.nonzero(labels != UNKNOWN)
    for r, c in zip(rows, cols):
        lines.append(f"{r} {c} {LABEL_NAMES[int(labels[r, c])]}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def read_label_grid(path) -> tuple[np.ndarray, dict]:
    """Load a label-grid file into a (size, size) array plus its header."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read label grid {path}: {exc}") from exc
    if not lines or not lines[0].startswith(_LABEL_HEADER):
        raise DataError(f"{path}: not a travgrid label file")
    meta = {}
    for token in lines[0][len(_LABEL_HEADER):].split():
        key, _, value = token.partition("=")
        meta[key] = value
    try:
        size = int(meta["size"])
        header = {
            "frame": int(meta["frame"]),
            "size": size,
            "resolution": float(meta["resolution"]),
            "origin_col": int(meta["origin_col"]),
            "origin_row": int(meta["origin_row"]),
        }
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: malformed label header") from exc

    labels = np.full((size, size), UNKNOWN, dtype=np.int8)
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3 or parts[2] not in NAME_LABELS:
            raise DataError(f"{path}:{lineno}: expected 'row col label'")
        r, c = int(parts[0]), int(parts[1])
        if not (0 <= r < size and 0 <= c < size):
            raise DataError(f"{path}:{lineno}: cell ({r}, {c}) outside "
                            f"a {size}x{size} grid")
        labels[r, c] = NAME_LABELS[parts[2]]
    return labels, header


def frame_file(directory, prefix: str, frame: int, suffix: str) -> Path:
    return Path(directory) / f"{prefix}_{frame:06d}{suffix}"


# --- feature tables -------------------------------------------------------------

def write_feature_table(path, labels: np.ndarray,
                        features: np.ndarray) -> None:
    """One row per cell: +1/-1 label followed by the feature values."""
    labels = np.asarray(labels)
    features = np.asarray(features, dtype=np.float64)
    if len(labels) != len(features):
        raise ValueError("label/feature row count mismatch")
    lines = [f"# travgrid features rows={len(labels)} "
             f"dim={features.shape[1] if features.ndim == 2 else 0}"]
    for label, row in zip(labels, features):
        lines.append(f"{int(label):+d} " +
                     " ".join(repr(float(v)) for v in row))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def read_feature_table(path) -> tuple[np.ndarray, np.ndarray]:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read feature table {path}: {exc}") from exc
    if not lines or not lines[0].startswith("# travgrid features"):
        raise DataError(f"{path}: not a travgrid feature table")
    labels = []
    rows = []
    dim = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split()
        try:
            labels.append(int(parts[0]))
            row = [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: bad number: {exc}") from exc
        if dim is None:
            dim = len(row)
        elif len(row) != dim:
            raise DataError(f"{path}:{lineno}: row has {len(row)} features, "
                            f"expected {dim}")
        rows.append(row)
    if not rows:
        raise DataError(f"{path}: feature table is empty")
    return np.array(labels, dtype=np.int8), np.array(rows)


# --- rasters --------------------------------------------------------------------

def label_raster(labels: np.ndarray, predictable: np.ndarray,
                 scale: int = 1) -> RgbImage:
    """Palette image of a label grid, row 0 at the bottom.

    White marks traversable cells, red non-traversable, gray everything
    the method could not predict.
    """
    labels = np.asarray(labels)
    pixels = np.empty(labels.shape + (3,), dtype=np.uint8)
    pixels[:] = _GRAY
    pixels[np.asarray(predictable, bool) & (labels == NAME_LABELS["T"])] = _WHITE
    pixels[np.asarray(predictable, bool) & (labels == NAME_LABELS["N"])] = _RED
    pixels = pixels[::-1]  # grid row 0 is the south edge; images go top-down
    if scale > 1:
        pixels = np.repeat(np.repeat(pixels, scale, axis=0), scale, axis=1)
    return RgbImage(pixels=np.ascontiguousarray(pixels))


def write_raster(path, grid: TraversabilityGrid, labels: np.ndarray,
                 scale: int = 1) -> Path:
    image = label_raster(labels, grid.predictable, scale)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return write_image(path, image)


# --- evaluation reports ---------------------------------------------------------

def _fmt(value: float | None) -> str:
    return "undefined" if value is None else f"{value:.4f}"


def format_report(report: EvalReport, budget_ms: float | None = None) -> str:
    c = report.counts
    lines = [
        "travgrid evaluation report",
        "",
        f"cells   TP={c.tp} TN={c.tn} FP={c.fp} FN={c.fn} UNK={c.unk} "
        f"TOT={c.total}",
        "",
        "metric          value",
    ]
    for key in METRIC_KEYS:
        lines.append(f"{key:<15} {_fmt(report.scores[key])}")
    if report.latency_mean_ms is not None:
        lines.append("")
        lines.append(f"latency mean {report.latency_mean_ms:.2f} ms, "
                     f"max {report.latency_max_ms:.2f} ms")
        for stage, mean_ms, max_ms in report.stage_latency:
            lines.append(f"  {stage:<12} mean {mean_ms:8.2f} ms   "
                         f"max {max_ms:8.2f} ms")
        if budget_ms is not None:
            verdict = "PASS" if report.latency_mean_ms < budget_ms else "FAIL"
            lines.append(f"budget {budget_ms:.0f} ms: {verdict}")
    if report.per_frame:
        lines.append("")
        lines.append("frame   TP    TN    FP    FN   UNK")
        for frame, fc in report.per_frame:
            lines.append(f"{frame:5d} {fc.tp:5d} {fc.tn:5d} {fc.fp:5d} "
                         f"{fc.fn:5d} {fc.unk:5d}")
    return "\n".join(lines) + "\n"


def write_report(report: EvalReport, directory,
                 budget_ms: float | None = None) -> tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    text_path = directory / "report.txt"
    text_path.write_text(format_report(report, budget_ms))

    csv_path = directory / "report.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tp", "tn", "fp", "fn", "unk", *METRIC_KEYS])
        writer.writerow([
            report.counts.tp, report.counts.tn, report.counts.fp,
            report.counts.fn, report.counts.unk,
            *("" if report.scores[k] is None else repr(report.scores[k])
              for k in METRIC_KEYS),
        ])
        writer.writerow([])
        writer.writerow(["frame", "tp", "tn", "fp", "fn", "unk"])
        for frame, fc in report.per_frame:
            writer.writerow([frame, fc.tp, fc.tn, fc.fp, fc.fn, fc.unk])
    return text_path, csv_path


def read_report_csv(path) -> tuple[ConfusionCounts, dict[str, float | None]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise DataError(f"{path}: truncated report")
    header, values = rows[0], rows[1]
    record = dict(zip(header, values))
    counts = ConfusionCounts(tp=int(record["tp"]), tn=int(record["tn"]),
                             fp=int(record["fp"]), fn=int(record["fn"]),
                             unk=int(record["unk"]))
    scores = {k: (None if record[k] == "" else float(record[k]))
              for k in METRIC_KEYS}
    return counts, scores


def write_latency_csv(path, stage_rows: list[tuple[str, float, float, int]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stage", "mean_ms", "max_ms", "frames"])
        for stage, mean_ms, max_ms, frames in stage_rows:
            writer.writerow([stage, f"{mean_ms:.4f}", f"{max_ms:.4f}", frames])


def write_cv_report(path, rows, best_c: float, best_gamma: float,
                    best_accuracy: float) -> None:
    lines = ["C gamma mean_accuracy fold_accuracies"]
    for row in rows:
        folds = " ".join(f"{a:.4f}" for a in row.fold_accuracies)
        lines.append(f"{row.c:g} {row.gamma:g} {row.mean_accuracy:.4f} "
                     f"{folds}")
    lines.append(f"best C={best_c:g} gamma={best_gamma:g} "
                 f"accuracy={best_accuracy:.4f}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
