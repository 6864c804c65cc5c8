"""Point cloud and rigid-transform primitives.

Clouds are stored as parallel numpy arrays (coordinates, reflectance,
per-point semantic class and instance id) tagged with the frame they are
expressed in. All functions here return new objects; arrays are shared,
never mutated in place.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

FRAME_LIDAR = "lidar"
FRAME_WORLD = "world"

_ORTHO_TOL = 1e-6


class LabeledPoint(NamedTuple):
    x: float
    y: float
    z: float
    reflectance: float
    semantic_class: int
    instance_id: int


@dataclass
class PointCloud:
    """A set of labeled points expressed in a named frame.

    Attributes
    ----------
    xyz : (n, 3) float64 array of coordinates in meters.
    reflectance : (n,) float32 array.
    semantic_class : (n,) uint16 array; 0 means unlabeled.
    instance_id : (n,) uint16 array.
    frame : either ``FRAME_LIDAR`` or ``FRAME_WORLD``.
    scan_index : index of the source scan, -1 if synthetic/merged.
    """

    xyz: np.ndarray
    reflectance: np.ndarray
    semantic_class: np.ndarray
    instance_id: np.ndarray
    frame: str = FRAME_LIDAR
    scan_index: int = -1

    def __post_init__(self):
        self.xyz = np.asarray(self.xyz, dtype=np.float64)
        if self.xyz.ndim != 2 or self.xyz.shape[1] != 3:
            raise ValueError(f"xyz must have shape (n, 3), got {self.xyz.shape}")
        n = len(self.xyz)
        self.reflectance = np.asarray(self.reflectance, dtype=np.float32)
        self.semantic_class = np.asarray(self.semantic_class, dtype=np.uint16)
        self.instance_id = np.asarray(self.instance_id, dtype=np.uint16)
        for name in ("reflectance", "semantic_class", "instance_id"):
            arr = getattr(self, name)
            if arr.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")
        if self.frame not in (FRAME_LIDAR, FRAME_WORLD):
            raise ValueError(f"unknown frame {self.frame!r}")
        if n and not np.isfinite(self.xyz).all():
            raise ValueError("cloud contains non-finite coordinates")

    def __len__(self) -> int:
        return len(self.xyz)

    def point(self, i: int) -> LabeledPoint:
        x, y, z = self.xyz[i]
        return LabeledPoint(
            float(x), float(y), float(z),
            float(self.reflectance[i]),
            int(self.semantic_class[i]),
            int(self.instance_id[i]),
        )

    @classmethod
    def from_xyz(cls, xyz, frame: str = FRAME_LIDAR, scan_index: int = -1,
                 semantic_class=None) -> "PointCloud":
        """Build a cloud from bare coordinates, zero-filling the rest."""
        xyz = np.asarray(xyz, dtype=np.float64).reshape(-1, 3)
        n = len(xyz)
        if semantic_class is None:
            semantic_class = np.zeros(n, dtype=np.uint16)
        return cls(
            xyz=xyz,
            reflectance=np.zeros(n, dtype=np.float32),
            semantic_class=semantic_class,
            instance_id=np.zeros(n, dtype=np.uint16),
            frame=frame,
            scan_index=scan_index,
        )


def nearest_rotation(m: np.ndarray) -> np.ndarray:
    """Project a near-rotation 3x3 matrix onto SO(3)."""
    u, _, vt = np.linalg.svd(np.asarray(m, dtype=np.float64))
    r = u @ vt
    if np.linalg.det(r) < 0:
        u = u.copy()
        u[:, -1] = -u[:, -1]
        r = u @ vt
    return r


@dataclass(frozen=True)
class Pose:
    """Rigid transform: maps points from a source frame into a target frame."""

    rotation: np.ndarray        # (3, 3)
    translation: np.ndarray     # (3,)

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64))
        object.__setattr__(self, "translation",
                           np.asarray(self.translation, dtype=np.float64).reshape(3))
        r = self.rotation
        if r.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {r.shape}")
        if np.abs(r @ r.T - np.eye(3)).max() > _ORTHO_TOL:
            raise ValueError("rotation is not orthonormal within 1e-6")
        if abs(np.linalg.det(r) - 1.0) > _ORTHO_TOL:
            raise ValueError("rotation determinant is not +1 within 1e-6")

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, xyz: np.ndarray) -> np.ndarray:
        """Transform an (n, 3) array of points."""
        return np.asarray(xyz, dtype=np.float64) @ self.rotation.T + self.translation

    def compose(self, other: "Pose") -> "Pose":
        """Return the pose equivalent to applying ``other`` first, then self."""
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.translation + self.translation)

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, -rt @ self.translation)

    def matrix(self) -> np.ndarray:
        """Homogeneous 4x4 form."""
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m


def transform_to_world(cloud: PointCloud, pose: Pose) -> PointCloud:
    """Express a LiDAR-frame cloud in the world frame.

    ``pose`` must map LiDAR coordinates to world coordinates. A cloud that
    is already in the world frame is refused rather than double-transformed.
    """
    if cloud.frame == FRAME_WORLD:
        raise ValueError("cloud is already in the world frame")
    return replace(cloud, xyz=pose.apply(cloud.xyz), frame=FRAME_WORLD)
