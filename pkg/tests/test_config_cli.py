"""Config parsing, validation, and command-line behavior."""

import numpy as np
import pytest

import fixture_gen
from travgrid.cli import main
from travgrid.config import (
    PipelineConfig,
    default_config_text,
    load_config,
    parse_config_text,
    parse_range,
)
from travgrid.exceptions import ConfigError
from travgrid.grid import NON_TRAVERSABLE, TRAVERSABLE, UNKNOWN
from travgrid.io.artifacts import label_raster, read_label_grid


# -- parsing --------------------------------------------------------------------


def test_empty_config_is_all_defaults():
    cfg = parse_config_text("")
    assert cfg == PipelineConfig()
    assert cfg.max_range == 12.0
    assert cfg.resolution == 0.4
    assert cfg.hsv_bins == (32, 8, 48)
    assert cfg.integration_count == 3
    assert cfg.filter_weight == 3


def test_parse_values_comments_and_lists():
    cfg = parse_config_text(
        "# leading comment\n"
        "max_range = 8.0   # trailing comment\n"
        "\n"
        "sequence = 07\n"
        "c_grid = 1, 10,100\n"
        "gamma_grid = 0.5 2.0\n"
        "traversable_classes = 40,44\n"
        "parallel = yes\n")
    assert cfg.max_range == 8.0
    assert cfg.sequence == "07"
    assert cfg.c_grid == (1.0, 10.0, 100.0)
    assert cfg.gamma_grid == (0.5, 2.0)
    assert cfg.traversable_classes == (40, 44)
    assert cfg.parallel is True


def test_unknown_key_names_the_line():
    with pytest.raises(ConfigError, match=r"<config>:2: unknown key 'reslution'"):
        parse_config_text("max_range = 8\nreslution = 0.4\n")


def test_missing_equals_sign():
    with pytest.raises(ConfigError, match="expected key = value"):
        parse_config_text("max_range 8\n")


def test_bad_value_reports_key():
    with pytest.raises(ConfigError, match="bad value for min_points"):
        parse_config_text("min_points = two\n")
    with pytest.raises(ConfigError, match="bad value for parallel"):
        parse_config_text("parallel = maybe\n")


def test_parse_range():
    assert parse_range("0..49") == (0, 49)
    assert parse_range(" 3..3 ") == (3, 3)
    for bad in ("5", "5..", "..5", "9..2", "-1..4", "a..b"):
        with pytest.raises(ValueError):
            parse_range(bad)


def test_range_keys_validated_at_parse_time():
    with pytest.raises(ConfigError, match="bad value for train_frames"):
        parse_config_text("train_frames = 10..2\n")


# -- validation -------------------------------------------------------------------


def test_overlapping_windows_rejected():
    with pytest.raises(ConfigError, match="overlap"):
        parse_config_text("train_frames = 0..10\ntest_frames = 10..20\n")


def test_bad_feature_mode():
    with pytest.raises(ConfigError, match="feature_mode"):
        parse_config_text("feature_mode = rgb\n")


def test_grid_ratio_errors_become_config_errors():
    with pytest.raises(ConfigError, match="resolution"):
        parse_config_text("max_range = 10\nresolution = 0.3\n")


def test_missing_dataset_root_rejected(tmp_path):
    with pytest.raises(ConfigError, match="dataset_root does not exist"):
        parse_config_text(f"dataset_root = {tmp_path / 'nope'}\n")


def test_empty_search_grid_rejected():
    with pytest.raises(ConfigError):
        parse_config_text("c_grid =\n")


def test_negative_warmup_rejected():
    with pytest.raises(ConfigError, match="warmup_frames"):
        parse_config_text("warmup_frames = -1\n")


def test_frames_for_and_override():
    cfg = parse_config_text("train_frames = 0..2\ntest_frames = 7..9\n")
    assert cfg.frames_for("train") == (0, 2)
    assert cfg.frames_for("test") == (7, 9)
    cfg.frames_override = "4..5"
    assert cfg.frames_for("train") == (4, 5)
    assert cfg.frames_for("test") == (4, 5)


def test_default_config_text_round_trips():
    assert parse_config_text(default_config_text()) == PipelineConfig()


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "absent.cfg")


def test_resolved_model_path():
    cfg = parse_config_text("output_dir = /tmp/xyz\n")
    assert str(cfg.resolved_model_path()) == "/tmp/xyz/model.txt"
    cfg.model_path = "elsewhere/m.txt"
    assert str(cfg.resolved_model_path()) == "elsewhere/m.txt"


# -- command line ------------------------------------------------------------------


@pytest.fixture
def light_cfg_file(light_root, tmp_path):
    out = tmp_path / "out"
    path = tmp_path / "run.cfg"
    path.write_text(fixture_gen.fixture_config_text(light_root, out))
    return path, out


def test_cli_config_error_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("train_frames = 0..10\ntest_frames = 5..20\n")
    assert main(["extract-gt", "--config", str(path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_cli_missing_config_exits_2(tmp_path, capsys):
    assert main(["train", "--config", str(tmp_path / "none.cfg")]) == 2
    assert "not found" in capsys.readouterr().err


def test_cli_bad_frames_flag_exits_2(light_cfg_file, capsys):
    path, _ = light_cfg_file
    assert main(["extract-gt", "--config", str(path), "--frames", "9..1"]) == 2
    capsys.readouterr()


def test_cli_missing_sequence_exits_3(light_cfg_file, capsys):
    path, _ = light_cfg_file
    assert main(["extract-gt", "--config", str(path), "--seq", "42"]) == 3
    assert "data error" in capsys.readouterr().err


def test_cli_train_without_table_exits_3(light_cfg_file, capsys):
    path, _ = light_cfg_file
    assert main(["train", "--config", str(path)]) == 3
    assert "training table not found" in capsys.readouterr().err


def test_cli_extract_gt_writes_label_grids(light_cfg_file, capsys):
    path, out = light_cfg_file
    assert main(["extract-gt", "--config", str(path)]) == 0
    assert "wrote 6 ground-truth grids" in capsys.readouterr().out
    files = sorted((out / "gt").iterdir())
    assert [f.name for f in files] == [
        f"gt_{i:06d}.txt" for i in (0, 1, 2, 7, 8, 9)]
    labels, meta = read_label_grid(files[0])
    assert meta["size"] == 20 and meta["resolution"] == 0.4
    assert (labels == TRAVERSABLE).any() and (labels == NON_TRAVERSABLE).any()


def test_cli_frames_flag_limits_extract_gt(light_cfg_file, capsys):
    path, out = light_cfg_file
    assert main(["extract-gt", "--config", str(path), "--frames", "7..8"]) == 0
    capsys.readouterr()
    assert [f.name for f in sorted((out / "gt").iterdir())] == [
        "gt_000007.txt", "gt_000008.txt"]


def test_cli_extract_features_deterministic(light_cfg_file, capsys):
    path, out = light_cfg_file
    assert main(["extract-features", "--config", str(path)]) == 0
    table = out / "features_hybrid.txt"
    assert table.exists()
    first = table.read_bytes()
    assert main(["extract-features", "--config", str(path)]) == 0
    capsys.readouterr()
    assert table.read_bytes() == first
    header = first.decode().splitlines()[0]
    assert "dim=109" in header  # 21 geometric + 32+8+48 color buckets


def test_cli_geom_only_flag_switches_table(light_cfg_file, capsys):
    path, out = light_cfg_file
    assert main(["extract-features", "--config", str(path),
                 "--geom-only"]) == 0
    capsys.readouterr()
    table = out / "features_geometric_only.txt"
    assert "dim=21" in table.read_text().splitlines()[0]


def test_raster_palette():
    labels = np.array([[TRAVERSABLE, NON_TRAVERSABLE],
                       [UNKNOWN, TRAVERSABLE]], dtype=np.int8)
    predictable = np.array([[True, True], [True, False]])
    image = label_raster(labels, predictable, scale=2)
    px = image.pixels
    assert px.shape == (4, 4, 3)
    # rasters are flipped so grid row 0 is the bottom image row
    assert tuple(px[0, 0]) == (128, 128, 128)     # unknown label
    assert tuple(px[0, 2]) == (128, 128, 128)     # unpredictable cell
    assert tuple(px[2, 0]) == (255, 255, 255)     # traversable
    assert tuple(px[2, 2]) == (220, 40, 40)       # non-traversable
