"""Dataset readers and artifact writers."""

from .images import RgbImage, read_image, write_image
from .kitti import (
    KittiSequence,
    lidar_pose,
    read_calibration,
    read_labels,
    read_poses,
    read_scan,
)

__all__ = [
    "KittiSequence",
    "RgbImage",
    "lidar_pose",
    "read_calibration",
    "read_image",
    "read_labels",
    "read_poses",
    "read_scan",
    "write_image",
]
