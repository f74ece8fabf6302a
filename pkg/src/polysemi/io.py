"""Artifact serialisation: measure CSV, JSON reports and PGM/PPM rasters.

Every writer goes through :func:`atomic_write`, which writes a temporary file
next to the target and renames it into place, so a failed run never leaves a
truncated artifact behind.

Floats are written as the shortest decimal string that round-trips to the
same double (``repr``), with a trailing ``.0`` dropped, so reading a file
back reproduces every value bit for bit. Non-finite values appear in JSON as
the strings ``"inf"``, ``"-inf"`` and ``"nan"``.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
import tempfile
import warnings
from pathlib import Path

import numpy as np

from .backward import EmpiricalMeasure
from .exceptions import OutputError

SENTINEL_RGB = (0, 255, 0)
MEASURE_HEADER = ("re", "im", "weight")


# -- numbers ------------------------------------------------------------------

def format_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    s = repr(x)
    return s[:-2] if s.endswith(".0") else s


def to_jsonable(obj):
    """Plain JSON tree from dataclasses, numpy values, complex numbers and tuples.

    Complex numbers become ``[re, im]``. Dataclass fields keep their
    declaration order, dict keys their insertion order.
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _Float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_Float(obj.real), _Float(obj.imag)]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialise {type(obj).__name__}")


class _Float(float):
    """Marker so the encoder can apply :func:`format_float`."""


def _encode(node, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(node, _Float):
        s = format_float(node)
        return s if math.isfinite(node) else json.dumps(s)
    if isinstance(node, dict):
        if not node:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in node.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(node, list):
        if not node:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in node):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in node) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in node]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    return json.dumps(node)


def dumps_report(obj, indent: int = 2) -> str:
    return _encode(to_jsonable(obj), indent, 0) + "\n"


# -- files --------------------------------------------------------------------

def atomic_write(path, data: bytes) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def write_report(path, obj) -> Path:
    return atomic_write(path, dumps_report(obj).encode())


def measure_csv(mu: EmpiricalMeasure) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MEASURE_HEADER)
    for z, wt in zip(mu.locations.tolist(), mu.weights.tolist()):
        w.writerow((format_float(z.real), format_float(z.imag), format_float(wt)))
    return buf.getvalue()


def write_measure(path, mu: EmpiricalMeasure) -> Path:
    return atomic_write(path, measure_csv(mu).encode())


def read_measure(path) -> EmpiricalMeasure:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != MEASURE_HEADER:
        raise ValueError(f"{path}: expected header {','.join(MEASURE_HEADER)}")
    body = rows[1:]
    loc = np.array([complex(float(r[0]), float(r[1])) for r in body], dtype=np.complex128)
    wt = np.array([float(r[2]) for r in body], dtype=float)
    return EmpiricalMeasure(loc, wt)


# -- rasters ------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class RasterImage:
    """Row-major 8-bit pixels; ``channels`` is 1 (gray) or 3 (RGB)."""

    width: int
    height: int
    channels: int
    pixels: bytes

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise ValueError("channels must be 1 or 3")
        if len(self.pixels) != self.width * self.height * self.channels:
            raise ValueError("pixel buffer does not match the image size")

    def to_bytes(self) -> bytes:
        magic = b"P5" if self.channels == 1 else b"P6"
        return magic + f"\n{self.width} {self.height}\n255\n".encode() + self.pixels

    def as_array(self) -> np.ndarray:
        a = np.frombuffer(self.pixels, dtype=np.uint8)
        shape = (self.height, self.width) if self.channels == 1 else (self.height, self.width, 3)
        return a.reshape(shape)


def read_raster(data: bytes) -> RasterImage:
    """Parse the P5/P6 files written by :meth:`RasterImage.to_bytes`."""
    magic, dims, maxval, rest = data.split(b"\n", 3)
    if magic not in (b"P5", b"P6") or maxval != b"255":
        raise ValueError("not an 8-bit binary PGM/PPM")
    w, h = map(int, dims.split())
    return RasterImage(w, h, 1 if magic == b"P5" else 3, rest)


def _image_rows(a: np.ndarray) -> np.ndarray:
    # grid row 0 is the lowest imaginary part; images are stored top row first
    return a[::-1]


def render_points(points, origin: complex, spacing: float, rows: int, cols: int) -> RasterImage:
    """Bin points to their nearest grid node; gray level grows with log(1 + count).

    Any occupied pixel is at least level 1, empty pixels are 0. An empty
    input yields an all-background image and a warning.
    """
    pts = np.asarray(points, dtype=np.complex128).ravel()
    counts = np.zeros((rows, cols), dtype=np.int64)
    if pts.size == 0:
        warnings.warn("no points to render; writing a blank image", RuntimeWarning, stacklevel=2)
    else:
        j = np.rint((pts.real - origin.real) / spacing)
        i = np.rint((pts.imag - origin.imag) / spacing)
        ok = np.isfinite(i) & np.isfinite(j) & (i >= 0) & (i < rows) & (j >= 0) & (j < cols)
        np.add.at(counts, (i[ok].astype(np.int64), j[ok].astype(np.int64)), 1)
    img = np.zeros((rows, cols), dtype=np.uint8)
    top = counts.max()
    if top > 0:
        level = np.floor(255 * np.log1p(counts) / math.log1p(top))
        img = np.where(counts > 0, np.maximum(level, 1), 0).astype(np.uint8)
    return RasterImage(cols, rows, 1, _image_rows(img).tobytes())


def render_field(values, rows: int, cols: int) -> RasterImage:
    """Linear blue-to-red ramp over the finite range; non-finite values in green.

    With t = (v - min) / (max - min) the colour is (255 t, 0, 255 (1 - t)),
    rounded to the nearest integer (ties to even). A constant field maps to t = 0.
    """
    v = np.asarray(values, dtype=float).reshape(rows, cols)
    fin = np.isfinite(v)
    rgb = np.empty((rows, cols, 3), dtype=np.uint8)
    rgb[:] = SENTINEL_RGB
    if not fin.any():
        warnings.warn("field has no finite values; writing a sentinel image", RuntimeWarning, stacklevel=2)
    else:
        lo, hi = v[fin].min(), v[fin].max()
        t = np.zeros_like(v) if hi == lo else (v - lo) / (hi - lo)
        r = np.rint(255 * t)
        b = np.rint(255 * (1 - t))
        rgb[fin, 0] = r[fin]
        rgb[fin, 1] = 0
        rgb[fin, 2] = b[fin]
    return RasterImage(cols, rows, 3, _image_rows(rgb).tobytes())


def write_raster(path, image: RasterImage) -> Path:
    return atomic_write(path, image.to_bytes())
