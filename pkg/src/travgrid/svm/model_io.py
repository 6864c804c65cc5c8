"""Versioned text serialization of trained models.

The format is line-oriented and fully decimal: every float is written
with ``repr``, which round-trips to the identical double, so a saved and
reloaded model produces bit-identical decision values.

    TRAVSVM v1
    kernel rbf gamma 0.1 degree 3 coef0 0.0
    mode hybrid
    hsv_bins 32 8 48
    dim 109
    bias -0.25
    scale_min <dim floats>
    scale_max <dim floats>
    sv <count>
    <dual_coef> <dim scaled floats>     (one line per support vector)
    end
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..exceptions import DataError
from .kernels import KERNELS
from .model import FEATURE_MODES, TraversabilityModel

MAGIC = "TRAVSVM v1"


def _floats(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def save_model(model: TraversabilityModel, path) -> None:
    lines = [
        MAGIC,
        f"kernel {model.kernel} gamma {float(model.gamma)!r} "
        f"degree {int(model.degree)} coef0 {float(model.coef0)!r}",
        f"mode {model.feature_mode}",
        ("hsv_bins " + " ".join(str(int(b)) for b in model.hsv_bins))
        if model.hsv_bins is not None else "hsv_bins none",
        f"dim {model.dim}",
        f"bias {float(model.bias)!r}",
        "scale_min " + _floats(model.scaler_min),
        "scale_max " + _floats(model.scaler_max),
        f"sv {model.n_support}",
    ]
    for coef, vec in zip(model.dual_coef, model.support_vectors):
        lines.append(f"{float(coef)!r} " + _floats(vec))
    lines.append("end")
    Path(path).write_text("\n".join(lines) + "\n")


class _Reader:
    def __init__(self, path):
        self.path = Path(path)
        try:
            text = self.path.read_text()
        except OSError as exc:
            raise DataError(f"cannot read model file {path}: {exc}") from exc
        self.lines = text.splitlines()
        self.pos = 0

    def next(self, what: str) -> str:
        if self.pos >= len(self.lines):
            raise DataError(f"{self.path}: truncated model file, "
                            f"expected {what}")
        line = self.lines[self.pos].strip()
        self.pos += 1
        return line

    def keyed(self, key: str) -> list[str]:
        line = self.next(f"'{key}' line")
        parts = line.split()
        if not parts or parts[0] != key:
            raise DataError(f"{self.path}: expected '{key}' line, "
                            f"got {line!r}")
        return parts[1:]


def _float_list(parts, n, what, path):
    if len(parts) != n:
        raise DataError(f"{path}: {what} has {len(parts)} values, "
                        f"expected {n}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise DataError(f"{path}: bad float in {what}: {exc}") from exc


def load_model(path) -> TraversabilityModel:
    r = _Reader(path)
    magic = r.next("magic header")
    if magic != MAGIC:
        raise DataError(f"{r.path}: not a {MAGIC} file "
                        f"(header {magic!r})")

    kparts = r.keyed("kernel")
    if len(kparts) != 7 or kparts[1] != "gamma" or kparts[3] != "degree" \
            or kparts[5] != "coef0":
        raise DataError(f"{r.path}: malformed kernel line")
    kernel = kparts[0]
    if kernel not in KERNELS:
        raise DataError(f"{r.path}: unknown kernel {kernel!r}")
    gamma, degree, coef0 = float(kparts[2]), int(kparts[4]), float(kparts[6])

    mode = r.keyed("mode")
    if len(mode) != 1 or mode[0] not in FEATURE_MODES:
        raise DataError(f"{r.path}: bad feature mode line")
    bins_parts = r.keyed("hsv_bins")
    if bins_parts == ["none"]:
        hsv_bins = None
    elif len(bins_parts) == 3:
        hsv_bins = tuple(int(b) for b in bins_parts)
    else:
        raise DataError(f"{r.path}: bad hsv_bins line")

    dim = int(r.keyed("dim")[0])
    bias = float(r.keyed("bias")[0])
    scale_min = _float_list(r.keyed("scale_min"), dim, "scale_min", r.path)
    scale_max = _float_list(r.keyed("scale_max"), dim, "scale_max", r.path)
    n_sv = int(r.keyed("sv")[0])
    if n_sv <= 0:
        raise DataError(f"{r.path}: model has no support vectors")

    dual = np.empty(n_sv)
    vectors = np.empty((n_sv, dim))
    for k in range(n_sv):
        parts = r.next(f"support vector {k}").split()
        row = _float_list(parts, dim + 1, f"support vector {k}", r.path)
        dual[k] = row[0]
        vectors[k] = row[1:]
    if r.next("'end' marker") != "end":
        raise DataError(f"{r.path}: missing end marker")

    try:
        return TraversabilityModel(
            kernel=kernel, gamma=gamma, degree=degree, coef0=coef0,
            bias=bias, dual_coef=dual, support_vectors=vectors,
            scaler_min=scale_min, scaler_max=scale_max,
            feature_mode=mode[0], hsv_bins=hsv_bins)
    except ValueError as exc:
        raise DataError(f"{r.path}: {exc}") from exc
