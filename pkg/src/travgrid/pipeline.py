"""Frame-by-frame orchestration of the full pipeline.

One :class:`FrameProcessor` owns the cross-frame state: the scan cache
used by multi-scan integration and the color store that carries
appearance evidence forward. Commands are thin loops over it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .evaluate import (
    EvalReport,
    LatencyRecorder,
    build_report,
    grid_ground_truth,
    score,
    validate_traversable_classes,
)
from .exceptions import ConfigError, DataError
from .features import (
    CellGeometry,
    frame_appearance_counts,
    frame_geometric_features,
    propagate_colors,
)
from .features.appearance import ColorStore
from .grid import TraversabilityGrid, build_grid, integrate_clouds, quantize_center
from .io.artifacts import (
    frame_file,
    read_label_grid,
    write_cv_report,
    write_feature_table,
    write_label_grid,
    write_latency_csv,
    write_raster,
)
from .io.kitti import KittiSequence
from .postfilter import filter_grid
from .svm import TraversabilityModel, grid_search, load_model, save_model

LATENCY_BUDGET_MS = 100.0


@dataclass
class FrameResult:
    frame: int
    grid: TraversabilityGrid
    geometry: CellGeometry
    features: np.ndarray


class FrameProcessor:
    """Runs the per-frame pipeline over one sequence."""

    def __init__(self, config: PipelineConfig, *, with_labels: bool = False,
                 model: TraversabilityModel | None = None,
                 recorder: LatencyRecorder | None = None):
        self.config = config
        self.grid_config = config.grid_config()
        self.gt_config = config.gt_config()
        self.with_labels = with_labels
        self.model = model
        self.recorder = recorder or LatencyRecorder()
        self.sequence = KittiSequence(config.dataset_root, config.sequence,
                                      poses_are_lidar=config.poses_are_lidar)
        self.hybrid = (model.feature_mode == "hybrid" if model is not None
                       else config.feature_mode == "hybrid")
        self.store = ColorStore(self.grid_config.hsv_bins) if self.hybrid else None
        self._scan_cache: dict[int, object] = {}
        if config.label_map:
            validate_traversable_classes(self.gt_config.traversable_classes,
                                         config.label_map)

    def _scan(self, frame: int):
        cloud = self._scan_cache.get(frame)
        if cloud is None:
            cloud = self.sequence.scan(frame, with_labels=self.with_labels)
            self._scan_cache[frame] = cloud
            keep = self.grid_config.integration_count + 1
            for old in sorted(self._scan_cache):
                if len(self._scan_cache) <= keep:
                    break
                del self._scan_cache[old]
        return cloud

    def _integrated_cloud(self, frame: int):
        n = min(self.grid_config.integration_count, frame + 1)
        frames = range(frame - n + 1, frame + 1)
        clouds = [self._scan(f) for f in frames]
        poses = [self.sequence.lidar_pose(f) for f in frames]
        return integrate_clouds(clouds, poses, n)

    def process(self, frame: int, *, want_gt: bool = False,
                predict: bool = False) -> FrameResult:
        rec = self.recorder
        with rec.timed("integration"):
            cloud = self._integrated_cloud(frame)
            pose = self.sequence.lidar_pose(frame)

        with rec.timed("grid"):
            if self.config.grid_center == "fixed":
                center = np.array([self.config.fixed_center_x,
                                   self.config.fixed_center_y])
            else:
                center = pose.translation[:2]
            grid = build_grid(cloud, quantize_center(center, self.grid_config.resolution),
                              self.grid_config, frame_index=frame)

        if want_gt:
            grid.gt_labels = grid_ground_truth(grid, cloud, self.gt_config)

        with rec.timed("geometric"):
            workers = 4 if self.config.parallel else 1
            geometry = frame_geometric_features(cloud, grid,
                                                pose.translation,
                                                self.grid_config,
                                                workers=workers)

        if self.hybrid:
            with rec.timed("appearance"):
                image = self.sequence.image(frame)
                counts, votes = frame_appearance_counts(
                    geometry, self.sequence.camera(), pose, image,
                    self.grid_config.hsv_bins)
                colors = propagate_colors(self.store, grid, geometry,
                                          counts, votes)
            features = np.hstack([geometry.features, colors])
        else:
            features = geometry.features

        if predict:
            if self.model is None:
                raise ConfigError("prediction requested without a model")
            with rec.timed("prediction"):
                labels = self.model.predict_labels(features)
                flat = grid.predicted.reshape(-1)
                flat[geometry.flat_ids] = labels
            with rec.timed("filter"):
                grid = filter_grid(grid, self.grid_config.filter_weight)

        return FrameResult(frame=frame, grid=grid, geometry=geometry,
                           features=features)


def _clip_frames(sequence: KittiSequence, lo: int, hi: int,
                 what: str) -> list[int]:
    available = sequence.num_frames()
    frames = [f for f in range(lo, hi + 1) if f < available]
    if not frames:
        warnings.warn(f"{what} range {lo}..{hi} selects no frames "
                      f"(sequence has {available})")
    return frames


def _warm_color_store(proc: FrameProcessor, first_frame: int) -> None:
    """Replay the approach to a frame window, for the color store only.

    The windows are cut out of one continuous drive, during which cells
    are imaged while still ahead of the vehicle. A processor starting
    cold at the window would miss that evidence, so it runs the preceding
    warmup_frames frames first. Purely geometric runs keep no cross-frame
    appearance state and skip this.
    """
    if not proc.hybrid or proc.config.warmup_frames <= 0:
        return
    for frame in range(max(0, first_frame - proc.config.warmup_frames),
                       first_frame):
        proc.process(frame)


def _feature_table_path(config: PipelineConfig) -> Path:
    return Path(config.output_dir) / f"features_{config.feature_mode}.txt"


# --- commands -------------------------------------------------------------------

def run_extract_gt(config: PipelineConfig) -> list[Path]:
    """Write per-frame ground-truth label grids for both frame windows."""
    proc = FrameProcessor(config, with_labels=True)
    out_dir = Path(config.output_dir) / "gt"
    written = []
    if config.frames_override:
        o0, o1 = config.frames_for("test")
        frames = _clip_frames(proc.sequence, o0, o1, "frames")
    else:
        t0, t1 = config.train_range
        e0, e1 = config.test_range
        frames = (_clip_frames(proc.sequence, t0, t1, "train")
                  + _clip_frames(proc.sequence, e0, e1, "test"))
    for frame in frames:
        result = proc.process(frame, want_gt=True)
        path = frame_file(out_dir, "gt", frame, ".txt")
        write_label_grid(path, result.grid, result.grid.gt_labels)
        written.append(path)
    return written


def run_extract_features(config: PipelineConfig) -> Path:
    """Build the training table over the train window.

    Rows are predictable cells with a known ground truth, ordered by
    (frame, row, col); each row is the +1/-1 label and the raw features.
    """
    from .grid import TRAVERSABLE, UNKNOWN

    proc = FrameProcessor(config, with_labels=True)
    t0, t1 = config.frames_for("train")
    _warm_color_store(proc, t0)
    labels = []
    blocks = []
    for frame in _clip_frames(proc.sequence, t0, t1, "train"):
        result = proc.process(frame, want_gt=True)
        gt_flat = result.grid.gt_labels.reshape(-1)[result.geometry.flat_ids]
        keep = gt_flat != UNKNOWN
        if not keep.any():
            continue
        labels.append(np.where(gt_flat[keep] == TRAVERSABLE, 1, -1))
        blocks.append(result.features[keep])
    if not blocks:
        raise DataError("no labeled predictable cells in the train range")
    path = _feature_table_path(config)
    write_feature_table(path, np.concatenate(labels), np.vstack(blocks))
    return path


def run_train(config: PipelineConfig) -> Path:
    """Grid-search (C, gamma) on the training table and save the winner."""
    from .io.artifacts import read_feature_table

    table = _feature_table_path(config)
    if not table.exists():
        raise DataError(f"training table not found: {table} "
                        f"(run extract-features first)")
    y, x = read_feature_table(table)
    if len(np.unique(y)) < 2:
        raise DataError(f"{table}: training data contains a single class")
    result = grid_search(x, y, config.train_settings())
    model = TraversabilityModel.from_fit(
        result.classifier, result.scaler, config.feature_mode,
        hsv_bins=config.hsv_bins if config.feature_mode == "hybrid" else None)
    model_path = config.resolved_model_path()
    model_path.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, model_path)
    write_cv_report(Path(config.output_dir) / "cv_report.txt", result.rows,
                    result.best_c, result.best_gamma, result.best_accuracy)
    return model_path


def _load_model_checked(config: PipelineConfig) -> TraversabilityModel:
    model = load_model(config.resolved_model_path())
    if model.feature_mode != config.feature_mode:
        raise ConfigError(
            f"model {config.resolved_model_path()} was trained in "
            f"{model.feature_mode} mode but the config asks for "
            f"{config.feature_mode}")
    return model


def run_predict(config: PipelineConfig) -> list[Path]:
    """Label every test frame, writing grids, rasters and latencies."""
    model = _load_model_checked(config)
    recorder = LatencyRecorder()
    proc = FrameProcessor(config, model=model)
    out = Path(config.output_dir)
    e0, e1 = config.frames_for("test")
    _warm_color_store(proc, e0)
    proc.recorder = recorder  # warm-up frames stay out of the stats
    written = []
    for frame in _clip_frames(proc.sequence, e0, e1, "test"):
        result = proc.process(frame, predict=True)
        path = frame_file(out / "pred", "pred", frame, ".txt")
        write_label_grid(path, result.grid, result.grid.filtered)
        write_raster(frame_file(out / "raster", "pred", frame, ".png"),
                     result.grid, result.grid.filtered,
                     scale=config.raster_scale)
        written.append(path)
    rows = [(stage, *recorder.stats(stage)) for stage in recorder.stages()]
    totals = recorder.frame_totals()
    if totals:
        rows.append(("total", sum(totals) / len(totals), max(totals),
                     len(totals)))
    write_latency_csv(out / "latency_predict.csv", rows)
    return written


def run_evaluate(config: PipelineConfig) -> EvalReport:
    """Score written predictions against written ground truth."""
    from .io.artifacts import write_report

    out = Path(config.output_dir)
    e0, e1 = config.frames_for("test")
    per_frame = []
    missing = []
    for frame in range(e0, e1 + 1):
        gt_path = frame_file(out / "gt", "gt", frame, ".txt")
        pred_path = frame_file(out / "pred", "pred", frame, ".txt")
        if not gt_path.exists() and not pred_path.exists():
            continue
        if not gt_path.exists() or not pred_path.exists():
            missing.append(str(gt_path if not gt_path.exists() else pred_path))
            continue
        gt, gt_meta = read_label_grid(gt_path)
        pred, pred_meta = read_label_grid(pred_path)
        for key in ("size", "origin_col", "origin_row"):
            if gt_meta[key] != pred_meta[key]:
                raise DataError(
                    f"frame {frame}: gt and prediction grids disagree on "
                    f"{key} ({gt_meta[key]} vs {pred_meta[key]})")
        per_frame.append((frame, score(gt, pred)))
    if missing:
        raise DataError("missing evaluation inputs:\n  " + "\n  ".join(missing))
    if not per_frame:
        raise DataError(f"no gt/prediction pairs found under {out}")

    report = build_report(per_frame)
    latency_csv = out / "latency_predict.csv"
    if latency_csv.exists():
        import csv as _csv

        with open(latency_csv, newline="") as fh:
            rows = list(_csv.DictReader(fh))
        report.stage_latency = [
            (r["stage"], float(r["mean_ms"]), float(r["max_ms"]))
            for r in rows if r["stage"] != "total"]
        for r in rows:
            if r["stage"] == "total":
                report.latency_mean_ms = float(r["mean_ms"])
                report.latency_max_ms = float(r["max_ms"])
    write_report(report, out, budget_ms=LATENCY_BUDGET_MS)
    return report


def run_bench(config: PipelineConfig) -> list[tuple[str, float, float, int]]:
    """Measure per-stage latency over the test window.

    Always measures the single-threaded pipeline; with the parallel flag
    a second pass measures the multi-threaded feature path for
    comparison. Rows from the second pass get a ``parallel:`` prefix.
    """
    import dataclasses as _dc

    model = _load_model_checked(config)
    out = Path(config.output_dir)
    e0, e1 = config.frames_for("test")

    def one_pass(parallel: bool) -> LatencyRecorder:
        cfg = _dc.replace(config, parallel=parallel)
        recorder = LatencyRecorder()
        proc = FrameProcessor(cfg, model=model)
        _warm_color_store(proc, e0)
        proc.recorder = recorder
        for frame in _clip_frames(proc.sequence, e0, e1, "bench"):
            proc.process(frame, predict=True)
        return recorder

    recorder = one_pass(False)
    rows = [(stage, *recorder.stats(stage)) for stage in recorder.stages()]
    totals = recorder.frame_totals()
    if totals:
        rows.append(("total", sum(totals) / len(totals), max(totals),
                     len(totals)))
    if config.parallel:
        par = one_pass(True)
        rows.extend((f"parallel:{stage}", *par.stats(stage))
                    for stage in par.stages())
        ptotals = par.frame_totals()
        if ptotals:
            rows.append(("parallel:total", sum(ptotals) / len(ptotals),
                         max(ptotals), len(ptotals)))
    write_latency_csv(out / "latency_bench.csv", rows)
    return rows
