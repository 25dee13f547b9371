"""On-disk formats: landmark CSV, transform JSON, and volume JSON + raw.

Point sets are CSV with the exact header ``name,x,y,z``, coordinates in
millimeters, UTF-8, LF line endings. Transforms are JSON objects with a
16-number row-major ``matrix`` and, when the matrix decomposes cleanly, a
``params`` object of t/r/s triples. Volumes are a JSON header describing
dims/spacing/origin plus a sibling raw file of little-endian 32-bit
floats in x-fastest order. All numbers are written at full precision;
any content-level problem raises :class:`FormatError`.
"""

from __future__ import annotations

import csv
import json
import os
from typing import Sequence

import numpy as np

from .core import AffineMatrix, AffineParams9, Point3, PointSet, Volume3, decompose
from .errors import DecompositionError, FormatError, LandregError

POINTS_HEADER = ("name", "x", "y", "z")
VOLUME_DTYPE = "f32"
_RAW_DTYPE = np.dtype("<f4")


def _require(condition: bool, path: str | os.PathLike, message: str) -> None:
    if not condition:
        raise FormatError(f"{path}: {message}")


def read_points(path: str | os.PathLike) -> PointSet:
    """Read a landmark CSV (header ``name,x,y,z``, mm)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    _require(bool(rows), path, "empty point file")
    _require(
        tuple(cell.strip() for cell in rows[0]) == POINTS_HEADER,
        path,
        f"expected header 'name,x,y,z', got {','.join(rows[0])!r}",
    )
    names: list[str] = []
    coords: list[tuple[float, float, float]] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        _require(len(row) == 4, path, f"line {lineno}: expected 4 fields, got {len(row)}")
        try:
            coords.append((float(row[1]), float(row[2]), float(row[3])))
        except ValueError as exc:
            raise FormatError(f"{path}: line {lineno}: {exc}") from exc
        names.append(row[0])
    _require(bool(coords), path, "point file holds no points")
    try:
        return PointSet(np.asarray(coords, dtype=float), names=tuple(names))
    except LandregError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_points(points: PointSet, path: str | os.PathLike) -> None:
    """Write a landmark CSV; unnamed points get names p0, p1, ..."""
    names = points.names
    if names is None:
        names = tuple(f"p{i}" for i in range(len(points)))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(POINTS_HEADER)
        for name, (x, y, z) in zip(names, points.coords):
            writer.writerow([name, repr(float(x)), repr(float(y)), repr(float(z))])


def read_transform(path: str | os.PathLike) -> AffineMatrix:
    """Read a transform JSON; the row-major ``matrix`` field is authoritative."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    _require(isinstance(payload, dict), path, "transform file must hold a JSON object")
    _require("matrix" in payload, path, "transform file lacks a 'matrix' field")
    entries = payload["matrix"]
    _require(
        isinstance(entries, list) and len(entries) == 16,
        path,
        "'matrix' must be a list of 16 numbers (row-major)",
    )
    try:
        matrix = np.asarray(entries, dtype=float).reshape(4, 4)
        return AffineMatrix(matrix)
    except (ValueError, LandregError) as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_transform(
    transform: AffineMatrix,
    path: str | os.PathLike,
    params: AffineParams9 | None = None,
) -> None:
    """Write a transform JSON with the matrix and, when available, its params.

    Without an explicit ``params`` the matrix is decomposed; a matrix
    outside the nine-parameter family (shear, gimbal lock) is written
    with the matrix field only.
    """
    if params is None:
        try:
            params = decompose(transform)
        except DecompositionError:
            params = None
    payload: dict[str, object] = {
        "matrix": [float(v) for v in transform.matrix.reshape(-1)]
    }
    if params is not None:
        payload["params"] = {
            "t": [float(v) for v in params.t],
            "r": [float(v) for v in params.r],
            "s": [float(v) for v in params.s],
        }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _triple(payload: dict, key: str, path: str | os.PathLike) -> tuple[float, float, float]:
    value = payload.get(key)
    _require(
        isinstance(value, list) and len(value) == 3,
        path,
        f"'{key}' must be a list of 3 numbers",
    )
    try:
        return tuple(float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: '{key}': {exc}") from exc


def read_volume(path: str | os.PathLike) -> Volume3:
    """Read a volume JSON header and its raw little-endian float32 payload.

    The ``data`` path is resolved relative to the header's directory.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    _require(isinstance(payload, dict), path, "volume header must be a JSON object")
    for key in ("dims", "spacing", "origin", "dtype", "data"):
        _require(key in payload, path, f"volume header lacks '{key}'")
    _require(
        payload["dtype"] == VOLUME_DTYPE,
        path,
        f"unsupported dtype {payload['dtype']!r}, expected '{VOLUME_DTYPE}'",
    )
    dims_raw = payload["dims"]
    _require(
        isinstance(dims_raw, list) and len(dims_raw) == 3,
        path,
        "'dims' must be a list of 3 integers",
    )
    _require(
        all(isinstance(d, int) and not isinstance(d, bool) for d in dims_raw),
        path,
        "'dims' entries must be integers",
    )
    dims = tuple(int(d) for d in dims_raw)
    spacing = _triple(payload, "spacing", path)
    origin = _triple(payload, "origin", path)
    _require(isinstance(payload["data"], str), path, "'data' must be a path string")
    raw_path = os.path.join(os.path.dirname(os.fspath(path)), payload["data"])
    with open(raw_path, "rb") as fh:
        blob = fh.read()
    n = dims[0] * dims[1] * dims[2]
    _require(
        len(blob) == n * _RAW_DTYPE.itemsize,
        path,
        f"raw file {payload['data']!r} holds {len(blob)} bytes, expected {n * _RAW_DTYPE.itemsize}",
    )
    data = np.frombuffer(blob, dtype=_RAW_DTYPE).astype(float)
    try:
        return Volume3(dims=dims, spacing=spacing, origin=Point3(*origin), data=data)
    except LandregError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_volume(volume: Volume3, path: str | os.PathLike, raw_name: str | None = None) -> None:
    """Write a volume as JSON header plus raw float32 file.

    The raw file lands next to the header, named after it unless
    ``raw_name`` overrides; values are narrowed to 32-bit floats.
    """
    path = os.fspath(path)
    if raw_name is None:
        stem = os.path.splitext(os.path.basename(path))[0]
        raw_name = stem + ".raw"
    payload = {
        "dims": [int(d) for d in volume.dims],
        "spacing": [float(s) for s in volume.spacing],
        "origin": [volume.origin.x, volume.origin.y, volume.origin.z],
        "dtype": VOLUME_DTYPE,
        "data": raw_name,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    raw = np.ascontiguousarray(volume.data, dtype=_RAW_DTYPE)
    with open(os.path.join(os.path.dirname(path), raw_name), "wb") as fh:
        fh.write(raw.tobytes())


def write_trace(trace: Sequence[tuple[int, float]], path: str | os.PathLike) -> None:
    """Write a refinement loss trace as ``iteration,loss`` CSV."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("iteration,loss\n")
        for iteration, value in trace:
            fh.write(f"{int(iteration)},{repr(float(value))}\n")
