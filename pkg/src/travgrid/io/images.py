"""RGB image loading and writing.

Only an 8-bit RGB raster is exposed, so the decode mechanism is
replaceable. PNG files go through Pillow when it is importable; a
self-contained binary PPM (P6) reader/writer covers environments and test
fixtures without any imaging dependency.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..exceptions import DataError

try:
    from PIL import Image as _PILImage
except ImportError:          # pragma: no cover - exercised only without Pillow
    _PILImage = None


@dataclass
class RgbImage:
    pixels: np.ndarray          # (height, width, 3) uint8

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.uint8)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError(f"pixels must have shape (h, w, 3), got {self.pixels.shape}")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


# --- PPM (P6) ---------------------------------------------------------------

def _read_ppm(path: Path) -> RgbImage:
    data = path.read_bytes()
    if not data.startswith(b"P6"):
        raise DataError(f"{path}: not a binary PPM (P6) file")
    # Header tokens: magic, width, height, maxval; '#' comments allowed.
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DataError(f"{path}: truncated PPM header")
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError as exc:
        raise DataError(f"{path}: bad PPM header: {exc}") from exc
    if maxval != 255:
        raise DataError(f"{path}: only maxval 255 PPM supported, got {maxval}")
    need = width * height * 3
    raster = data[pos:pos + need]
    if len(raster) != need:
        raise DataError(f"{path}: PPM raster truncated "
                        f"({len(raster)} of {need} bytes)")
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3)
    return RgbImage(pixels.copy())


def _write_ppm(path: Path, image: RgbImage) -> None:
    header = f"P6\n{image.width} {image.height}\n255\n".encode("ascii")
    path.write_bytes(header + image.pixels.tobytes())


# --- public API --------------------------------------------------------------

def read_image(path) -> RgbImage:
    """Read an RGB8 image; PNG via Pillow when available, PPM always."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"image not found: {path}")
    if path.suffix.lower() == ".ppm":
        return _read_ppm(path)
    if _PILImage is None:
        raise DataError(f"{path}: decoding {path.suffix} requires Pillow")
    try:
        with _PILImage.open(path) as img:
            return RgbImage(np.asarray(img.convert("RGB")))
    except Exception as exc:
        raise DataError(f"{path}: failed to decode image: {exc}") from exc


def write_image(path, image: RgbImage) -> Path:
    """Write an RGB8 image; falls back to PPM when PNG support is missing."""
    path = Path(path)
    if path.suffix.lower() == ".ppm":
        _write_ppm(path, image)
        return path
    if _PILImage is not None:
        _PILImage.fromarray(image.pixels, mode="RGB").save(path)
        return path
    path = path.with_suffix(".ppm")
    _write_ppm(path, image)
    return path
