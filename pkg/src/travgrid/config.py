"""Flat key=value pipeline configuration.

One option per line, ``key = value``, with ``#`` comments. Every key has
a default, so an empty file is a valid config; unknown keys are errors
rather than silent typos. Defaults are the tuned road-driving setup:
12 m range, 0.4 m cells, 0.2 m sub-cells, 2-point predictability, 3-scan
integration, 160 distance bins and 32/8/48 HSV buckets.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .evaluate import GroundTruthConfig
from .exceptions import ConfigError
from .grid import GridConfig
from .svm.model import FEATURE_MODES
from .svm.search import TrainSettings


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.replace(",", " ").split())


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.replace(",", " ").split())


def parse_range(text: str) -> tuple[int, int]:
    """Inclusive frame range written as ``A..B``."""
    parts = text.strip().split("..")
    if len(parts) != 2:
        raise ValueError(f"range must look like A..B, got {text!r}")
    start, end = int(parts[0]), int(parts[1])
    if start < 0 or end < start:
        raise ValueError(f"bad range {text!r}: need 0 <= A <= B")
    return start, end


def _range_str(text: str) -> str:
    parse_range(text)
    return text.strip()


@dataclass
class PipelineConfig:
    # Dataset layout and artifacts
    dataset_root: str = ""
    sequence: str = "00"
    output_dir: str = "out"
    model_path: str = ""
    label_map: str = ""
    # Frame windows (inclusive, 10 Hz: 0..49 is the first five seconds).
    # frames_override, usually set by the CLI --frames flag, replaces the
    # window a command would otherwise use. Color evidence accumulates
    # while driving, so commands that consume it warm the color store on
    # up to warmup_frames frames before their window, mimicking the
    # continuous operation the windows are cut from.
    train_frames: str = "0..49"
    test_frames: str = "50..549"
    frames_override: str = ""
    warmup_frames: int = 10
    # Grid geometry
    max_range: float = 12.0
    resolution: float = 0.4
    internal_resolution: float = 0.2
    min_points: int = 2
    integration_count: int = 3
    curvity_bins: int = 160
    hsv_h: int = 32
    hsv_s: int = 8
    hsv_v: int = 48
    filter_weight: int = 3
    # Pose conventions
    poses_are_lidar: bool = False
    grid_center: str = "vehicle"
    fixed_center_x: float = 0.0
    fixed_center_y: float = 0.0
    # Ground truth
    traversable_classes: tuple[int, ...] = (40, 44, 48, 49, 60)
    nontrav_threshold: int = 2
    # Training
    c_grid: tuple[float, ...] = (0.1, 1.0, 10.0, 100.0)
    gamma_grid: tuple[float, ...] = (0.01, 0.1, 1.0, 10.0)
    folds: int = 5
    smo_tolerance: float = 1e-3
    max_passes: int = 100_000
    pos_weight: float = 1.0
    seed: int = 0
    # Execution
    feature_mode: str = "hybrid"
    parallel: bool = False
    raster_scale: int = 4

    @property
    def hsv_bins(self) -> tuple[int, int, int]:
        return (self.hsv_h, self.hsv_s, self.hsv_v)

    @property
    def train_range(self) -> tuple[int, int]:
        return parse_range(self.train_frames)

    @property
    def test_range(self) -> tuple[int, int]:
        return parse_range(self.test_frames)

    def frames_for(self, role: str) -> tuple[int, int]:
        """Window a command should process; the override wins when set."""
        if self.frames_override:
            return parse_range(self.frames_override)
        return self.train_range if role == "train" else self.test_range

    def grid_config(self) -> GridConfig:
        try:
            return GridConfig(
                max_range=self.max_range, resolution=self.resolution,
                internal_resolution=self.internal_resolution,
                min_points=self.min_points,
                integration_count=self.integration_count,
                curvity_bins=self.curvity_bins, hsv_bins=self.hsv_bins,
                filter_weight=self.filter_weight)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def gt_config(self) -> GroundTruthConfig:
        try:
            return GroundTruthConfig(
                traversable_classes=frozenset(self.traversable_classes),
                min_points=self.min_points,
                nontrav_threshold=self.nontrav_threshold)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def train_settings(self) -> TrainSettings:
        try:
            return TrainSettings(
                c_grid=self.c_grid, gamma_grid=self.gamma_grid,
                folds=self.folds, tolerance=self.smo_tolerance,
                max_passes=self.max_passes, seed=self.seed,
                pos_weight=self.pos_weight)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def resolved_model_path(self) -> Path:
        if self.model_path:
            return Path(self.model_path)
        return Path(self.output_dir) / "model.txt"

    def validate(self) -> None:
        if self.feature_mode not in FEATURE_MODES:
            raise ConfigError(
                f"feature_mode must be one of {FEATURE_MODES}, "
                f"got {self.feature_mode!r}")
        if self.grid_center not in ("vehicle", "fixed"):
            raise ConfigError("grid_center must be 'vehicle' or 'fixed'")
        if self.raster_scale < 1:
            raise ConfigError("raster_scale must be at least 1")
        if self.warmup_frames < 0:
            raise ConfigError("warmup_frames must not be negative")
        try:
            t0, t1 = self.train_range
            e0, e1 = self.test_range
            if self.frames_override:
                parse_range(self.frames_override)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if t0 <= e1 and e0 <= t1:
            raise ConfigError(
                f"train frames {self.train_frames} overlap test frames "
                f"{self.test_frames}")
        if self.dataset_root and not Path(self.dataset_root).exists():
            raise ConfigError(
                f"dataset_root does not exist: {self.dataset_root}")
        # Constructing the sub-configs runs their own validation.
        self.grid_config()
        self.gt_config()
        self.train_settings()


_CASTERS = {
    str: lambda s: s.strip(),
    bool: _bool,
    int: int,
    float: float,
    tuple[float, ...]: _float_list,
    tuple[int, ...]: _int_list,
}

_RANGE_KEYS = {"train_frames", "test_frames"}


def _field_casters() -> dict:
    casters = {}
    for f in fields(PipelineConfig):
        if f.name in _RANGE_KEYS:
            casters[f.name] = _range_str
        else:
            casters[f.name] = _CASTERS[f.type if not isinstance(f.type, str)
                                       else eval(f.type)]  # noqa: S307
    return casters


def parse_config_text(text: str, source: str = "<config>") -> PipelineConfig:
    casters = _field_casters()
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value, "
                              f"got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in casters:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            values[key] = casters[key](value.strip())
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for "
                              f"{key}: {exc}") from exc
    cfg = PipelineConfig(**values)
    cfg.validate()
    return cfg


def load_config(path) -> PipelineConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    return parse_config_text(p.read_text(), source=str(p))


def default_config_text() -> str:
    """A config file listing every key at its default value."""
    lines = ["# travgrid pipeline configuration", ""]
    for f in fields(PipelineConfig):
        default = f.default
        if isinstance(default, tuple):
            value = ",".join(str(v) for v in default)
        elif isinstance(default, bool):
            value = "true" if default else "false"
        else:
            value = str(default)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
