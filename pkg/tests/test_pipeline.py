"""End-to-end plumbing: FrameProcessor staging, commands, artifacts."""

import dataclasses
import shutil
from types import SimpleNamespace

import numpy as np
import pytest

import fixture_gen
from travgrid.cli import main
from travgrid.config import parse_config_text
from travgrid.evaluate import grid_ground_truth
from travgrid.exceptions import ConfigError, DataError
from travgrid.features import frame_geometric_features
from travgrid.features.appearance import (
    ColorStore,
    frame_appearance_counts,
    propagate_colors,
)
from travgrid.grid import (
    TRAVERSABLE,
    UNKNOWN,
    build_grid,
    integrate_clouds,
    quantize_center,
)
from travgrid.io.artifacts import (
    read_feature_table,
    read_label_grid,
    read_report_csv,
)
from travgrid.io.kitti import KittiSequence
from travgrid.pipeline import (
    FrameProcessor,
    run_evaluate,
    run_extract_features,
    run_extract_gt,
    run_predict,
    run_train,
)
from travgrid.svm import load_model


# -- FrameProcessor against hand staging -------------------------------------------


def test_process_matches_manual_staging(light_config):
    cfg = light_config
    gc = cfg.grid_config()
    frame = 4
    proc = FrameProcessor(cfg)
    result = proc.process(frame)

    seq = KittiSequence(cfg.dataset_root, cfg.sequence)
    clouds = [seq.scan(f) for f in (2, 3, 4)]
    poses = [seq.lidar_pose(f) for f in (2, 3, 4)]
    cloud = integrate_clouds(clouds, poses, 3)
    pose = poses[-1]
    grid = build_grid(cloud, quantize_center(pose.translation[:2], gc.resolution),
                      gc, frame_index=frame)
    geometry = frame_geometric_features(cloud, grid, pose.translation, gc)
    counts, votes = frame_appearance_counts(
        geometry, seq.camera(), pose, seq.image(frame), gc.hsv_bins)
    colors = propagate_colors(ColorStore(gc.hsv_bins), grid, geometry,
                              counts, votes)

    assert result.grid.origin_cell == grid.origin_cell
    assert np.array_equal(result.grid.counts, grid.counts)
    assert np.array_equal(result.geometry.flat_ids, geometry.flat_ids)
    assert np.array_equal(result.features,
                          np.hstack([geometry.features, colors]))


def test_geometric_only_skips_appearance(light_config):
    cfg = dataclasses.replace(light_config, feature_mode="geometric_only")
    proc = FrameProcessor(cfg)
    result = proc.process(3)
    assert result.features.shape[1] == 21
    assert proc.store is None


def test_color_store_accumulates_across_frames(light_config):
    """Processing 3 then 4 sees more color evidence than 4 alone."""
    proc = FrameProcessor(light_config)
    proc.process(3)
    warm = proc.process(4)
    cold = FrameProcessor(light_config).process(4)
    assert not np.array_equal(warm.features[:, 21:], cold.features[:, 21:])
    # the geometric half is per-frame and stays identical
    assert np.array_equal(warm.features[:, :21], cold.features[:, :21])


def test_integration_warmup(light_config):
    proc = FrameProcessor(light_config)
    seq = proc.sequence
    sizes = [len(seq.scan(f).xyz) for f in range(3)]
    assert len(proc._integrated_cloud(0).xyz) == sizes[0]
    assert len(proc._integrated_cloud(1).xyz) == sizes[0] + sizes[1]
    assert len(proc._integrated_cloud(2).xyz) == sum(sizes)


def test_predict_without_model_is_config_error(light_config):
    proc = FrameProcessor(light_config)
    with pytest.raises(ConfigError, match="without a model"):
        proc.process(0, predict=True)


# -- full command chain on the synthetic sequence -----------------------------------


@pytest.fixture(scope="module")
def run(light_root, tmp_path_factory):
    """One extract -> train -> predict -> evaluate chain, shared read-only."""
    out = tmp_path_factory.mktemp("chain")
    text = fixture_gen.fixture_config_text(light_root, out,
                                           c_grid="10", gamma_grid="1")
    cfg_path = tmp_path_factory.mktemp("cfg") / "run.cfg"
    cfg_path.write_text(text)
    config = parse_config_text(text)
    gt_files = run_extract_gt(config)
    table = run_extract_features(config)
    model_path = run_train(config)
    pred_files = run_predict(config)
    report = run_evaluate(config)
    return SimpleNamespace(out=out, config=config, cfg_path=cfg_path,
                           gt_files=gt_files, table=table,
                           model_path=model_path, pred_files=pred_files,
                           report=report)


def test_extract_gt_matches_oracle(run):
    frame = 8
    path = [p for p in run.gt_files if p.name == "gt_000008.txt"][0]
    stored, meta = read_label_grid(path)
    assert meta["frame"] == frame

    proc = FrameProcessor(run.config, with_labels=True)
    cloud = proc._integrated_cloud(frame)
    result = proc.process(frame, want_gt=True)
    expected = grid_ground_truth(result.grid, cloud, run.config.gt_config())
    assert np.array_equal(stored, expected)
    assert meta["origin_col"] == result.grid.origin_cell[0]
    assert meta["origin_row"] == result.grid.origin_cell[1]


def test_feature_table_matches_manual_pass(run):
    y, x = read_feature_table(run.table)
    proc = FrameProcessor(run.config, with_labels=True)
    labels, blocks = [], []
    for frame in range(0, 3):
        result = proc.process(frame, want_gt=True)
        gt = result.grid.gt_labels.reshape(-1)[result.geometry.flat_ids]
        keep = gt != UNKNOWN
        labels.append(np.where(gt[keep] == TRAVERSABLE, 1, -1))
        blocks.append(result.features[keep])
    assert np.array_equal(y, np.concatenate(labels))
    assert np.array_equal(x, np.vstack(blocks))
    assert x.shape[1] == 109
    assert set(np.unique(y)) == {-1, 1}


def test_train_artifacts(run):
    model = load_model(run.model_path)
    assert model.feature_mode == "hybrid"
    assert model.dim == 109
    assert model.hsv_bins == (32, 8, 48)
    assert model.gamma == 1.0

    lines = (run.out / "cv_report.txt").read_text().splitlines()
    assert lines[0].startswith("C gamma mean_accuracy")
    assert len(lines) == 3  # header, one combination, best line
    assert lines[-1].startswith("best C=10 gamma=1 accuracy=")


def test_predict_artifacts(run):
    assert [p.name for p in run.pred_files] == [
        f"pred_{i:06d}.txt" for i in (7, 8, 9)]
    for frame in (7, 8, 9):
        assert (run.out / "raster" / f"pred_{frame:06d}.png").exists()
    labels, meta = read_label_grid(run.pred_files[0])
    assert meta["size"] == run.config.grid_config().size
    assert (labels != UNKNOWN).sum() > 50

    lat = (run.out / "latency_predict.csv").read_text().splitlines()
    assert lat[0] == "stage,mean_ms,max_ms,frames"
    stages = [line.split(",")[0] for line in lat[1:]]
    assert stages == ["integration", "grid", "geometric", "appearance",
                      "prediction", "filter", "total"]
    assert lat[-1].split(",")[-1] == "3"


def test_predictions_are_filtered_labels(run):
    """Written grids hold the post-filter labels, not the raw SVM output."""
    model = load_model(run.model_path)
    proc = FrameProcessor(run.config, model=model)
    for frame in range(max(0, 7 - run.config.warmup_frames), 7):
        proc.process(frame)  # replay the color warm-up predict does
    result = proc.process(7, predict=True)
    stored, _ = read_label_grid(run.pred_files[0])
    assert np.array_equal(stored, result.grid.filtered)


def test_evaluate_report(run):
    report = run.report
    assert report.counts.total > 0
    assert report.scores["accuracy"] is not None
    assert len(report.per_frame) == 3
    assert report.latency_mean_ms is not None  # merged from the predict run

    text = (run.out / "report.txt").read_text()
    assert text.startswith("travgrid evaluation report")
    assert "budget 100 ms:" in text

    counts, scores = read_report_csv(run.out / "report.csv")
    assert counts == report.counts
    assert scores["accuracy"] == report.scores["accuracy"]
    assert scores["miou"] == report.scores["miou"]


def test_rerun_predict_is_deterministic(run, tmp_path):
    cfg = dataclasses.replace(run.config, output_dir=str(tmp_path / "re"),
                              model_path=str(run.model_path))
    shutil.copytree(run.out / "gt", tmp_path / "re" / "gt")
    run_predict(cfg)
    for frame in (7, 8, 9):
        a = (run.out / "pred" / f"pred_{frame:06d}.txt").read_bytes()
        b = (tmp_path / "re" / "pred" / f"pred_{frame:06d}.txt").read_bytes()
        assert a == b


def test_model_mode_mismatch_rejected(run, tmp_path):
    cfg = dataclasses.replace(run.config, feature_mode="geometric_only",
                              output_dir=str(tmp_path),
                              model_path=str(run.model_path))
    with pytest.raises(ConfigError, match="trained in hybrid mode"):
        run_predict(cfg)


def test_evaluate_missing_predictions(light_root, tmp_path):
    text = fixture_gen.fixture_config_text(light_root, tmp_path / "half")
    config = parse_config_text(text)
    run_extract_gt(config)
    with pytest.raises(DataError, match="missing evaluation inputs"):
        run_evaluate(config)


def test_evaluate_rejects_mismatched_grids(run, tmp_path):
    out = tmp_path / "tampered"
    shutil.copytree(run.out, out)
    target = out / "pred" / "pred_000007.txt"
    first, rest = target.read_text().split("\n", 1)
    target.write_text(first.replace("origin_col=", "origin_col=9") + "\n" + rest)
    cfg = dataclasses.replace(run.config, output_dir=str(out))
    with pytest.raises(DataError, match="disagree on origin_col"):
        run_evaluate(cfg)


def test_cli_bench_reports_budget(run, capsys):
    assert main(["bench", "--config", str(run.cfg_path)]) == 0
    out = capsys.readouterr().out
    assert "budget 100 ms:" in out
    assert ("PASS" in out) or ("FAIL" in out)
    assert "geometric" in out and "total" in out
    assert (run.out / "latency_bench.csv").exists()


def test_cli_evaluate_prints_report(run, capsys):
    assert main(["evaluate", "--config", str(run.cfg_path)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("travgrid evaluation report")
    assert "accuracy" in out
