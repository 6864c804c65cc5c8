"""Camera model: intrinsic projection plus LiDAR-to-camera extrinsic."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class CameraModel:
    projection: np.ndarray      # (3, 4) projection matrix (camera frame -> pixels)
    lidar_to_cam: np.ndarray    # (4, 4) rigid transform
    width: int = 1226
    height: int = 370

    def __post_init__(self):
        object.__setattr__(self, "projection",
                           np.asarray(self.projection, dtype=np.float64))
        object.__setattr__(self, "lidar_to_cam",
                           np.asarray(self.lidar_to_cam, dtype=np.float64))
        if self.projection.shape != (3, 4):
            raise ValueError(f"projection must be 3x4, got {self.projection.shape}")
        if np.linalg.matrix_rank(self.projection) != 3:
            raise ValueError("projection matrix must have rank 3")
        if self.lidar_to_cam.shape != (4, 4):
            raise ValueError(f"lidar_to_cam must be 4x4, got {self.lidar_to_cam.shape}")
        if np.abs(self.lidar_to_cam[3] - np.array([0, 0, 0, 1.0])).max() > 1e-9:
            raise ValueError("lidar_to_cam bottom row must be [0 0 0 1]")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")

    def with_image_size(self, width: int, height: int) -> "CameraModel":
        return replace(self, width=int(width), height=int(height))


def project_world_points(camera: CameraModel, lidar_pose, xyz_world: np.ndarray):
    """Project world points through LiDAR and camera frames onto the image.

    ``lidar_pose`` maps LiDAR to world. Returns ``(uv, depth)`` where ``uv``
    is (n, 2) pixel coordinates and ``depth`` the homogeneous scale; points
    with ``depth <= 0`` lie behind the camera and their ``uv`` is unreliable.
    """
    xyz_lidar = lidar_pose.inverse().apply(xyz_world)
    ones = np.ones((len(xyz_lidar), 1))
    hom = np.hstack([xyz_lidar, ones]) @ camera.lidar_to_cam.T
    img = hom @ camera.projection.T
    depth = img[:, 2]
    safe = np.where(depth == 0.0, 1.0, depth)
    uv = img[:, :2] / safe[:, None]
    return uv, depth
