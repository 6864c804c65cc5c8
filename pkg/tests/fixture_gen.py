"""Synthetic KITTI-layout fixture: flat road, grass band, box obstacles.

The scene is deterministic and fully ray-cast. A vehicle drives straight
down a flat road at 1.2 m per frame. A grass band runs parallel to the
road on the left; it is geometrically identical to the road (same gentle
millimeter-scale undulation) and differs only in color and semantic
class, so geometry-only models cannot separate it. Three boxes sit on
the road ahead as obstacles.

Every artifact matches the dataset layout the package reads: velodyne
``.bin`` scans, ``.label`` files, camera-frame poses, a calib file with
P2 and Tr, PPM images rendered through the same camera model, and a
label-map YAML. Two parameter sets are provided: LIGHT for end-to-end
tests (8 m grid) and DENSE for latency benchmarks (12 m grid, ~100k
integrated points).
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# Classes: road is traversable; grass (vegetation) and boxes are not.
CLASS_ROAD = 40
CLASS_GRASS = 70
CLASS_BOX = 10

GRASS_Y = (1.6, 4.0)
BOXES = (
    (5.0, 6.0, -2.5, -1.5),   # x0, x1, y0, y1
    (8.5, 9.5, -1.5, -0.5),
    (12.0, 13.0, -3.5, -2.5),
)
BOX_HEIGHT = 1.0

SPEED = 1.2               # meters per frame
LIDAR_HEIGHT = 1.7
N_FRAMES = 10

# Camera intrinsics and mounting (see calib construction below).
IMG_W, IMG_H = 384, 128
FX = FY = 110.0
CX, CY = 192.0, 64.0
CAM_IN_LIDAR = np.array([0.3, 0.0, -0.2])   # forward and slightly down
CAM2_SHIFT = np.array([-0.06, 0.0, 0.0])    # cam0 -> cam2, rectified frame

R_LIDAR_TO_CAM = np.array([
    [0.0, -1.0, 0.0],
    [0.0, 0.0, -1.0],
    [1.0, 0.0, 0.0],
])


@dataclass(frozen=True)
class SceneSpec:
    rings: int
    azimuths: int
    ring_near: float = 0.9
    ring_far: float = 13.0


LIGHT = SceneSpec(rings=48, azimuths=360)
DENSE = SceneSpec(rings=72, azimuths=600)


def ground_height(x, y):
    """Millimeter-scale undulation, identical on road and grass."""
    return 0.004 * np.sin(3.7 * x) * np.cos(2.9 * y)


def _ray_cast(origins, dirs):
    """Nearest hit of each ray against the ground plane and the boxes.

    Returns (points, classes, instances); rays that hit nothing (there
    are none here, every downward ray reaches ground) get t = inf and
    are dropped by the caller.
    """
    n = len(dirs)
    t_best = np.full(n, np.inf)
    cls = np.zeros(n, dtype=np.uint32)
    inst = np.zeros(n, dtype=np.uint32)

    down = dirs[:, 2] < -1e-9
    t_ground = np.where(down, -origins[:, 2] / np.where(down, dirs[:, 2], 1.0),
                        np.inf)
    with np.errstate(invalid="ignore"):
        hit_xy = origins[:, :2] + t_ground[:, None] * dirs[:, :2]
    t_best = np.where(t_ground > 0, t_ground, np.inf)
    on_grass = (hit_xy[:, 1] >= GRASS_Y[0]) & (hit_xy[:, 1] < GRASS_Y[1])
    cls = np.where(np.isfinite(t_best),
                   np.where(on_grass, CLASS_GRASS, CLASS_ROAD), 0)

    for index, (x0, x1, y0, y1) in enumerate(BOXES, start=1):
        lo = np.array([x0, y0, 0.0])
        hi = np.array([x1, y1, BOX_HEIGHT])
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (lo - origins) / dirs
            t2 = (hi - origins) / dirs
        near = np.nanmax(np.minimum(t1, t2), axis=1)
        far = np.nanmin(np.maximum(t1, t2), axis=1)
        hit = (near <= far) & (far > 0)
        t_box = np.where(near > 0, near, far)
        better = hit & (t_box > 1e-6) & (t_box < t_best)
        t_best = np.where(better, t_box, t_best)
        cls = np.where(better, CLASS_BOX, cls)
        inst = np.where(better, index, inst)

    valid = np.isfinite(t_best)
    points = origins[valid] + t_best[valid, None] * dirs[valid]
    cls = cls[valid]
    inst = inst[valid]
    on_ground = cls != CLASS_BOX
    points[on_ground, 2] = ground_height(points[on_ground, 0],
                                         points[on_ground, 1])
    return points, cls.astype(np.uint32), inst.astype(np.uint32)


def _scan_directions(spec: SceneSpec) -> np.ndarray:
    ring_dist = np.geomspace(spec.ring_near, spec.ring_far, spec.rings)
    elevation = -np.arctan2(LIDAR_HEIGHT, ring_dist)
    azimuth = np.linspace(0.0, 2.0 * np.pi, spec.azimuths, endpoint=False)
    el = np.repeat(elevation, spec.azimuths)
    az = np.tile(azimuth, spec.rings)
    return np.column_stack([np.cos(el) * np.cos(az),
                            np.cos(el) * np.sin(az),
                            np.sin(el)])


def make_scan(frame: int, spec: SceneSpec):
    """One LiDAR sweep in the sensor frame, plus labels."""
    origin_w = np.array([SPEED * frame, 0.0, LIDAR_HEIGHT])
    dirs = _scan_directions(spec)
    origins = np.broadcast_to(origin_w, dirs.shape)
    points_w, cls, inst = _ray_cast(origins, dirs)
    points_l = points_w - origin_w  # identity heading
    reflectance = (0.25 + 0.5 * (cls == CLASS_GRASS)
                   + 0.1 * (cls == CLASS_BOX)).astype(np.float32)
    return points_l.astype(np.float32), reflectance, cls, inst


def _surface_color(points, cls):
    """Deterministic per-hit colors with mild texture."""
    x, y = points[:, 0], points[:, 1]
    wiggle = np.sin(5.1 * x) * np.cos(6.3 * y)
    colors = np.empty((len(points), 3))
    road = cls == CLASS_ROAD
    grass = cls == CLASS_GRASS
    box = cls == CLASS_BOX
    colors[road] = np.array([116.0, 116.0, 120.0])
    colors[road] += (12.0 * wiggle[road])[:, None]
    colors[grass] = np.array([62.0, 152.0, 72.0])
    colors[grass, 1] += 18.0 * wiggle[grass]
    colors[box] = np.array([204.0, 86.0, 44.0])
    colors[box, 0] += 10.0 * wiggle[box]
    return np.clip(colors, 0.0, 255.0).astype(np.uint8)


def make_image(frame: int) -> np.ndarray:
    """Render the camera view by ray-casting every pixel."""
    lidar_origin = np.array([SPEED * frame, 0.0, LIDAR_HEIGHT])
    # cam2 center: cam0 coords of cam2 origin are -CAM2_SHIFT
    cam0_in_lidar = CAM_IN_LIDAR
    cam2_in_lidar = cam0_in_lidar + R_LIDAR_TO_CAM.T @ (-CAM2_SHIFT)
    origin = lidar_origin + cam2_in_lidar

    us, vs = np.meshgrid(np.arange(IMG_W, dtype=np.float64),
                         np.arange(IMG_H, dtype=np.float64))
    d_cam = np.stack([(us - CX) / FX, (vs - CY) / FY, np.ones_like(us)],
                     axis=-1).reshape(-1, 3)
    d_world = d_cam @ R_LIDAR_TO_CAM  # rows times R = R.T @ d per row
    origins = np.broadcast_to(origin, d_world.shape)

    pixels = np.empty((IMG_H * IMG_W, 3), dtype=np.uint8)
    pixels[:] = (165, 195, 235)  # sky
    points, cls, _ = _ray_cast(origins, d_world)
    # _ray_cast compacts away escaping rays; rebuild its keep mask so the
    # returned hits land on the right pixels.
    hit_mask = np.isfinite(_hit_t(origins, d_world))
    pixels[hit_mask] = _surface_color(points, cls)
    return pixels.reshape(IMG_H, IMG_W, 3)


def _hit_t(origins, dirs):
    """t of the nearest hit per ray (inf when the ray escapes)."""
    down = dirs[:, 2] < -1e-9
    t_best = np.where(down, -origins[:, 2] / np.where(down, dirs[:, 2], 1.0),
                      np.inf)
    t_best = np.where(t_best > 0, t_best, np.inf)
    for x0, x1, y0, y1 in BOXES:
        lo = np.array([x0, y0, 0.0])
        hi = np.array([x1, y1, BOX_HEIGHT])
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (lo - origins) / dirs
            t2 = (hi - origins) / dirs
        near = np.nanmax(np.minimum(t1, t2), axis=1)
        far = np.nanmin(np.maximum(t1, t2), axis=1)
        hit = (near <= far) & (far > 0)
        t_box = np.where(near > 0, near, far)
        better = hit & (t_box > 1e-6) & (t_box < t_best)
        t_best = np.where(better, t_box, t_best)
    return t_best


def _write_ppm(path: Path, pixels: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(f"P6\n{pixels.shape[1]} {pixels.shape[0]}\n255\n".encode())
        fh.write(pixels.tobytes())


def _calib_text() -> str:
    k = np.array([[FX, 0.0, CX], [0.0, FY, CY], [0.0, 0.0, 1.0]])
    p0 = np.hstack([k, np.zeros((3, 1))])
    p2 = np.hstack([k, (k @ CAM2_SHIFT)[:, None]])
    t_lc = -R_LIDAR_TO_CAM @ CAM_IN_LIDAR
    tr = np.hstack([R_LIDAR_TO_CAM, t_lc[:, None]])

    def row(m):
        return " ".join(repr(float(v)) for v in m.reshape(-1))

    return (f"P0: {row(p0)}\nP1: {row(p0)}\nP2: {row(p2)}\n"
            f"P3: {row(p0)}\nTr: {row(tr)}\n")


def _poses_text() -> str:
    lines = []
    r_wc = R_LIDAR_TO_CAM.T
    t_lc = -R_LIDAR_TO_CAM @ CAM_IN_LIDAR
    for frame in range(N_FRAMES):
        lidar_t = np.array([SPEED * frame, 0.0, LIDAR_HEIGHT])
        cam_t = lidar_t - r_wc @ t_lc
        mat = np.hstack([r_wc, cam_t[:, None]])
        lines.append(" ".join(repr(float(v)) for v in mat.reshape(-1)))
    return "\n".join(lines) + "\n"


_LABEL_MAP_YAML = """\
labels:
  0: "unlabeled"
  10: "car"
  40: "road"
  70: "vegetation"
"""


def generate(root, spec: SceneSpec = LIGHT) -> Path:
    """Write the full dataset under ``root``; returns the sequence dir."""
    root = Path(root)
    seq = root / "sequences" / "00"
    for sub in ("velodyne", "labels", "image_2"):
        (seq / sub).mkdir(parents=True, exist_ok=True)
    (seq / "calib.txt").write_text(_calib_text())
    (seq / "poses.txt").write_text(_poses_text())
    (root / "label_map.yaml").write_text(_LABEL_MAP_YAML)

    for frame in range(N_FRAMES):
        points, reflectance, cls, inst = make_scan(frame, spec)
        scan = np.hstack([points, reflectance[:, None]]).astype(np.float32)
        scan.tofile(seq / "velodyne" / f"{frame:06d}.bin")
        words = (cls.astype(np.uint32)
                 | (inst.astype(np.uint32) << 16)).astype("<u4")
        words.tofile(seq / "labels" / f"{frame:06d}.label")
        _write_ppm(seq / "image_2" / f"{frame:06d}.ppm", make_image(frame))
    return seq


def fixture_config_text(root, output_dir, *, max_range: float = 8.0,
                        train_frames: str = "0..2",
                        test_frames: str = "7..9",
                        feature_mode: str = "hybrid",
                        c_grid: str = "1,10,100",
                        gamma_grid: str = "0.1,1,10",
                        seed: int = 7) -> str:
    return f"""\
dataset_root = {root}
sequence = 00
output_dir = {output_dir}
label_map = {Path(root) / 'label_map.yaml'}
train_frames = {train_frames}
test_frames = {test_frames}
max_range = {max_range}
resolution = 0.4
internal_resolution = 0.2
min_points = 2
integration_count = 3
curvity_bins = 160
hsv_h = 32
hsv_s = 8
hsv_v = 48
filter_weight = 3
traversable_classes = 40
nontrav_threshold = 2
c_grid = {c_grid}
gamma_grid = {gamma_grid}
folds = 5
smo_tolerance = 0.001
max_passes = 100000
pos_weight = 1.0
seed = {seed}
feature_mode = {feature_mode}
raster_scale = 4
"""


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Generate the synthetic test dataset.")
    parser.add_argument("--root", required=True)
    parser.add_argument("--dense", action="store_true",
                        help="use the dense benchmark point counts")
    parser.add_argument("--emit-config", default=None, metavar="PATH",
                        help="also write a matching config file")
    parser.add_argument("--output-dir", default="out")
    args = parser.parse_args(argv)
    spec = DENSE if args.dense else LIGHT
    seq = generate(args.root, spec)
    print(f"wrote {N_FRAMES} frames under {seq}")
    if args.emit_config:
        max_range = 12.0 if args.dense else 8.0
        test = "5..9" if args.dense else "7..9"
        Path(args.emit_config).write_text(fixture_config_text(
            args.root, args.output_dir, max_range=max_range,
            test_frames=test))
        print(f"wrote config {args.emit_config}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
