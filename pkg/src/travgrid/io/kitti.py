"""Readers for the KITTI odometry / SemanticKITTI on-disk layout.

Expected sequence layout::

    <root>/sequences/<seq>/velodyne/000000.bin    float32 x,y,z,reflectance
    <root>/sequences/<seq>/labels/000000.label    uint32 per point
    <root>/sequences/<seq>/image_2/000000.png     (or .ppm)
    <root>/sequences/<seq>/calib.txt              P2 and Tr entries
    <root>/sequences/<seq>/poses.txt              12 floats per line
                                                  (<root>/poses/<seq>.txt also probed)

Scans are little-endian float32 quadruples. Label words carry the semantic
class in the low 16 bits and the instance id in the high 16 bits. Pose
lines are row-major 3x4 camera-frame matrices; LiDAR-to-world transforms
are obtained by composing a pose with the ``Tr`` calibration entry unless
the poses are declared to be LiDAR-frame already.
"""

from __future__ import annotations

import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..camera import CameraModel
from ..cloud import FRAME_LIDAR, PointCloud, Pose, nearest_rotation
from ..exceptions import DataError
from .images import RgbImage, read_image

_POINT_BYTES = 16  # four little-endian float32 per point
_POSE_DRIFT_LIMIT = 1e-3


def read_scan(path, scan_index: int = -1) -> PointCloud:
    """Read one raw LiDAR scan (.bin) into a LiDAR-frame cloud."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"scan not found: {path}")
    size = path.stat().st_size
    if size % _POINT_BYTES != 0:
        raise DataError(
            f"{path}: size {size} is not a multiple of {_POINT_BYTES}; "
            f"record boundary broken at byte offset {size - size % _POINT_BYTES}")
    raw = np.fromfile(path, dtype="<f4").reshape(-1, 4)
    if len(raw) == 0:
        warnings.warn(f"{path}: empty scan", stacklevel=2)
    return PointCloud(
        xyz=raw[:, :3].astype(np.float64),
        reflectance=raw[:, 3].copy(),
        semantic_class=np.zeros(len(raw), dtype=np.uint16),
        instance_id=np.zeros(len(raw), dtype=np.uint16),
        frame=FRAME_LIDAR,
        scan_index=scan_index,
    )


def read_labels(path, cloud: PointCloud) -> PointCloud:
    """Attach per-point semantic classes and instance ids to ``cloud``."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"label file not found: {path}")
    words = np.fromfile(path, dtype="<u4")
    if len(words) != len(cloud):
        raise DataError(f"{path}: {len(words)} labels for {len(cloud)} points")
    return replace(
        cloud,
        semantic_class=(words & 0xFFFF).astype(np.uint16),
        instance_id=(words >> 16).astype(np.uint16),
    )


def _parse_pose_line(values: np.ndarray, path, lineno: int) -> Pose:
    mat = values.reshape(3, 4)
    rot, trans = mat[:, :3], mat[:, 3]
    drift = np.abs(rot @ rot.T - np.eye(3)).max()
    if drift > _POSE_DRIFT_LIMIT:
        raise DataError(f"{path}:{lineno}: rotation drift {drift:.2e} "
                        f"exceeds {_POSE_DRIFT_LIMIT:.0e}")
    if drift > 1e-12:
        rot = nearest_rotation(rot)
    return Pose(rot, trans)


def read_poses(path) -> list[Pose]:
    """Read a poses.txt file (one row-major 3x4 matrix per line)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"pose file not found: {path}")
    poses = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 12:
                raise DataError(f"{path}:{lineno}: expected 12 values, got {len(parts)}")
            try:
                values = np.array([float(p) for p in parts])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            poses.append(_parse_pose_line(values, path, lineno))
    return poses


def read_calibration(path) -> CameraModel:
    """Parse calib.txt; needs the P2 projection and the Tr extrinsic.

    Unknown keys are ignored. The returned model carries a default image
    size; callers should fix it up from an actual frame with
    ``with_image_size``.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"calibration file not found: {path}")
    entries = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or ":" not in line:
                continue
            key, _, rest = line.partition(":")
            parts = rest.split()
            if len(parts) != 12:
                continue
            try:
                entries[key.strip()] = np.array([float(p) for p in parts]).reshape(3, 4)
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    for key in ("P2", "Tr"):
        if key not in entries:
            raise DataError(f"{path}: missing calibration entry {key!r}")
    lidar_to_cam = np.vstack([entries["Tr"], [0.0, 0.0, 0.0, 1.0]])
    return CameraModel(projection=entries["P2"], lidar_to_cam=lidar_to_cam)


def lidar_pose(cam_pose: Pose, camera: CameraModel) -> Pose:
    """Compose a camera-frame odometry pose into a LiDAR-to-world pose."""
    rot = camera.lidar_to_cam[:3, :3]
    tr = Pose(nearest_rotation(rot), camera.lidar_to_cam[:3, 3])
    return cam_pose.compose(tr)


# --- sequence access ----------------------------------------------------------

class KittiSequence:
    """Random access to one sequence of a KITTI-layout dataset."""

    def __init__(self, root, sequence: str, poses_are_lidar: bool = False):
        self.root = Path(root)
        self.sequence = sequence
        self.seq_dir = self.root / "sequences" / sequence
        if not self.seq_dir.is_dir():
            raise DataError(f"sequence directory not found: {self.seq_dir}")
        self.velodyne_dir = self.seq_dir / "velodyne"
        self.labels_dir = self.seq_dir / "labels"
        self.image_dir = self.seq_dir / "image_2"
        self.poses_are_lidar = poses_are_lidar
        self._camera = None
        self._poses = None

    # -- file paths --

    def scan_path(self, frame: int) -> Path:
        return self.velodyne_dir / f"{frame:06d}.bin"

    def label_path(self, frame: int) -> Path:
        return self.labels_dir / f"{frame:06d}.label"

    def image_path(self, frame: int) -> Path:
        png = self.image_dir / f"{frame:06d}.png"
        if png.exists():
            return png
        return self.image_dir / f"{frame:06d}.ppm"

    def _poses_path(self) -> Path:
        local = self.seq_dir / "poses.txt"
        if local.exists():
            return local
        return self.root / "poses" / f"{self.sequence}.txt"

    # -- data --

    def num_frames(self) -> int:
        if not self.velodyne_dir.is_dir():
            raise DataError(f"velodyne directory not found: {self.velodyne_dir}")
        return len(list(self.velodyne_dir.glob("*.bin")))

    def scan(self, frame: int, with_labels: bool = True) -> PointCloud:
        cloud = read_scan(self.scan_path(frame), scan_index=frame)
        label_path = self.label_path(frame)
        if with_labels and label_path.exists():
            cloud = read_labels(label_path, cloud)
        return cloud

    def camera(self) -> CameraModel:
        if self._camera is None:
            model = read_calibration(self.seq_dir / "calib.txt")
            image_path = self.image_path(0)
            if image_path.exists():
                img = read_image(image_path)
                model = model.with_image_size(img.width, img.height)
            self._camera = model
        return self._camera

    def poses(self) -> list[Pose]:
        if self._poses is None:
            self._poses = read_poses(self._poses_path())
        return self._poses

    def lidar_pose(self, frame: int) -> Pose:
        poses = self.poses()
        if frame >= len(poses):
            raise DataError(f"no pose for frame {frame} "
                            f"({len(poses)} poses in {self._poses_path()})")
        if self.poses_are_lidar:
            return poses[frame]
        return lidar_pose(poses[frame], self.camera())

    def image(self, frame: int) -> RgbImage:
        return read_image(self.image_path(frame))
