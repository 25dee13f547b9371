"""Geometry primitives: points, point sets, volumes, and affine transforms.

World coordinates are millimeters throughout. Transforms are parameterized
either as a 4x4 homogeneous matrix (``AffineMatrix``) or as nine scalars
(``AffineParams9``): translation, Euler angles, and per-axis scales. The
two forms are converted by :func:`compose` and :func:`decompose`.

Conventions, fixed once and relied on everywhere:

* Rotations are intrinsic Z-Y-X: ``R = Rz(rz) @ Ry(ry) @ Rx(rx)``.
* Scaling is applied before rotation: the linear part is ``R @ diag(s)``,
  so a transformed point is ``R @ S @ p + t``.
* Volumes index voxels x-fastest: ``linear = x + nx * (y + ny * z)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    CorrespondenceError,
    DecompositionError,
    InvalidParameterError,
)

_BOTTOM_ROW = np.array([0.0, 0.0, 0.0, 1.0])

# Off-diagonal residue allowed in the normalized linear part before the
# matrix is rejected as sheared.
SHEAR_TOLERANCE = 1e-6

# |cos(ry)| below which Euler extraction is refused (gimbal lock).
_GIMBAL_TOLERANCE = 1e-8


def _as_float3(values, what: str) -> tuple[float, float, float]:
    vals = tuple(float(v) for v in values)
    if len(vals) != 3:
        raise InvalidParameterError(f"{what} must have exactly 3 components, got {len(vals)}")
    if not all(math.isfinite(v) for v in vals):
        raise InvalidParameterError(f"{what} must be finite, got {vals}")
    return vals


@dataclass(frozen=True)
class Point3:
    """A world-space point in millimeters. All components must be finite."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise InvalidParameterError(f"point component {name} must be finite, got {v}")
            object.__setattr__(self, name, v)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @classmethod
    def from_array(cls, arr) -> "Point3":
        x, y, z = arr
        return cls(float(x), float(y), float(z))


class PointSet:
    """An ordered set of corresponding landmarks.

    Order carries the correspondence: index i in a moving set pairs with
    index i in the fixed set. Coordinates are held as an immutable
    (n, 3) float64 array; ``names`` optionally labels each point.
    """

    __slots__ = ("_coords", "_names")

    def __init__(self, coords, names: Sequence[str] | None = None):
        arr = np.asarray(coords, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise InvalidParameterError(f"point set must be (n, 3) shaped, got {arr.shape}")
        if arr.shape[0] < 1:
            raise InvalidParameterError("point set must contain at least one point")
        if not np.all(np.isfinite(arr)):
            raise InvalidParameterError("point set contains non-finite coordinates")
        arr = arr.copy()
        arr.flags.writeable = False
        self._coords = arr
        if names is not None:
            names = tuple(str(n) for n in names)
            if len(names) != arr.shape[0]:
                raise InvalidParameterError(
                    f"got {len(names)} names for {arr.shape[0]} points"
                )
        self._names = names

    @classmethod
    def from_points(cls, points: Iterable[Point3], names: Sequence[str] | None = None) -> "PointSet":
        return cls(np.array([[p.x, p.y, p.z] for p in points]), names)

    @property
    def coords(self) -> np.ndarray:
        """Read-only (n, 3) float64 coordinate array."""
        return self._coords

    @property
    def names(self) -> tuple[str, ...] | None:
        return self._names

    def __len__(self) -> int:
        return self._coords.shape[0]

    def __getitem__(self, i: int) -> Point3:
        return Point3.from_array(self._coords[i])

    def __iter__(self) -> Iterator[Point3]:
        for row in self._coords:
            yield Point3.from_array(row)

    def __repr__(self) -> str:
        return f"PointSet(n={len(self)})"


@dataclass(frozen=True)
class Volume3:
    """A 3D scalar grid with anisotropic voxel spacing.

    ``data`` is a flat array indexed x-fastest: ``x + nx * (y + ny * z)``.
    The world coordinate of voxel (x, y, z) is
    ``origin + (x * sx, y * sy, z * sz)``.
    """

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    origin: Point3 = Point3(0.0, 0.0, 0.0)
    data: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or any(d < 1 for d in dims):
            raise InvalidParameterError(f"dims must be 3 positive integers, got {self.dims}")
        spacing = _as_float3(self.spacing, "spacing")
        if any(s <= 0 for s in spacing):
            raise InvalidParameterError(f"spacing must be strictly positive, got {spacing}")
        n = dims[0] * dims[1] * dims[2]
        if self.data is None:
            data = np.zeros(n)
        else:
            data = np.asarray(self.data, dtype=float).reshape(-1).copy()
        if data.size != n:
            raise InvalidParameterError(
                f"data length {data.size} does not match dims product {n}"
            )
        data.flags.writeable = False
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "data", data)

    @property
    def n_voxels(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    def linear_index(self, ix: int, iy: int, iz: int) -> int:
        nx, ny, _ = self.dims
        return ix + nx * (iy + ny * iz)

    def voxel_of_index(self, linear: int) -> tuple[int, int, int]:
        nx, ny, _ = self.dims
        return linear % nx, (linear // nx) % ny, linear // (nx * ny)

    def voxel_center(self, ix: int, iy: int, iz: int) -> Point3:
        sx, sy, sz = self.spacing
        return Point3(self.origin.x + ix * sx, self.origin.y + iy * sy, self.origin.z + iz * sz)

    def nearest_voxel(self, point: Point3) -> tuple[int, int, int]:
        """Index of the voxel whose center is nearest to ``point`` (unclamped)."""
        sx, sy, sz = self.spacing
        return (
            int(round((point.x - self.origin.x) / sx)),
            int(round((point.y - self.origin.y) / sy)),
            int(round((point.z - self.origin.z) / sz)),
        )

    def contains_voxel(self, ix: int, iy: int, iz: int) -> bool:
        nx, ny, nz = self.dims
        return 0 <= ix < nx and 0 <= iy < ny and 0 <= iz < nz

    def data3d(self) -> np.ndarray:
        """The data as a (nz, ny, nx) view: element [z, y, x] is voxel (x, y, z)."""
        nx, ny, nz = self.dims
        return self.data.reshape(nz, ny, nx)

    def with_data(self, data) -> "Volume3":
        """A volume with the same geometry and new voxel values."""
        return Volume3(self.dims, self.spacing, self.origin, np.asarray(data).reshape(-1))


@dataclass(frozen=True)
class AffineParams9:
    """Nine transform parameters: translation (mm), Euler angles (rad), scales.

    Scales must be strictly positive; the parameter family deliberately
    excludes shear and reflections.
    """

    t: tuple[float, float, float]
    r: tuple[float, float, float]
    s: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "t", _as_float3(self.t, "translation"))
        object.__setattr__(self, "r", _as_float3(self.r, "rotation"))
        s = _as_float3(self.s, "scale")
        if any(v <= 0 for v in s):
            raise InvalidParameterError(f"scales must be strictly positive, got {s}")
        object.__setattr__(self, "s", s)

    @classmethod
    def identity(cls) -> "AffineParams9":
        return cls((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), (1.0, 1.0, 1.0))

    def as_vector(self) -> np.ndarray:
        """Parameters as (tx, ty, tz, rx, ry, rz, sx, sy, sz)."""
        return np.array(self.t + self.r + self.s)

    @classmethod
    def from_vector(cls, v) -> "AffineParams9":
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.size != 9:
            raise InvalidParameterError(f"parameter vector must have 9 entries, got {v.size}")
        return cls(tuple(v[0:3]), tuple(v[3:6]), tuple(v[6:9]))


class AffineMatrix:
    """A 4x4 homogeneous transform with bottom row (0, 0, 0, 1).

    The upper-left 3x3 linear block must be invertible. Instances are
    immutable.
    """

    __slots__ = ("_m",)

    def __init__(self, m):
        arr = np.asarray(m, dtype=float)
        if arr.shape != (4, 4):
            raise InvalidParameterError(f"affine matrix must be 4x4, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidParameterError("affine matrix contains non-finite entries")
        if not np.array_equal(arr[3], _BOTTOM_ROW):
            raise InvalidParameterError(f"bottom row must be (0, 0, 0, 1), got {arr[3]}")
        if np.linalg.det(arr[:3, :3]) == 0.0:
            raise InvalidParameterError("linear part of affine matrix is singular")
        arr = arr.copy()
        arr.flags.writeable = False
        self._m = arr

    @classmethod
    def identity(cls) -> "AffineMatrix":
        return cls(np.eye(4))

    @classmethod
    def from_linear_translation(cls, linear, translation) -> "AffineMatrix":
        m = np.eye(4)
        m[:3, :3] = np.asarray(linear, dtype=float)
        m[:3, 3] = np.asarray(translation, dtype=float)
        return cls(m)

    @property
    def matrix(self) -> np.ndarray:
        """Read-only 4x4 matrix."""
        return self._m

    @property
    def linear(self) -> np.ndarray:
        """Read-only upper-left 3x3 block."""
        return self._m[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        """Read-only translation column."""
        return self._m[:3, 3]

    def __repr__(self) -> str:
        return f"AffineMatrix({self._m.tolist()})"


def rotation_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotation_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_matrix(rx: float, ry: float, rz: float) -> np.ndarray:
    """Intrinsic Z-Y-X rotation: Rz @ Ry @ Rx."""
    return rotation_z(rz) @ rotation_y(ry) @ rotation_x(rx)


def compose(params: AffineParams9) -> AffineMatrix:
    """Build the homogeneous matrix for nine transform parameters.

    The linear part is ``Rz(rz) @ Ry(ry) @ Rx(rx) @ diag(sx, sy, sz)``;
    the translation column is ``t``. Applying the result to a point p
    yields ``R @ S @ p + t``.
    """
    if not isinstance(params, AffineParams9):
        params = AffineParams9(*params)
    linear = rotation_matrix(*params.r) * np.asarray(params.s)
    return AffineMatrix.from_linear_translation(linear, params.t)


def decompose(matrix: AffineMatrix) -> AffineParams9:
    """Split a matrix back into nine parameters.

    Requires the linear part to factor as a proper rotation times a
    positive diagonal scale, which holds for every similarity transform
    and for every :func:`compose` output. Scales are the column norms of
    the linear block; angles come from the normalized rotation in Z-Y-X
    convention.

    Raises :class:`DecompositionError` for reflections, for shear above
    ``SHEAR_TOLERANCE``, and at gimbal lock (|ry| = pi/2), where Euler
    angles are not uniquely recoverable.
    """
    a = matrix.linear
    scales = np.sqrt((a * a).sum(axis=0))
    if np.any(scales == 0.0):
        raise DecompositionError("linear part has a zero column; no positive scale exists")
    rot = a / scales
    if np.linalg.det(rot) < 0.0:
        raise DecompositionError("linear part contains a reflection (negative determinant)")
    residue = rot.T @ rot - np.eye(3)
    off = np.abs(residue - np.diag(np.diag(residue))).max()
    if off > SHEAR_TOLERANCE:
        raise DecompositionError(
            f"linear part is sheared (orthogonality residue {off:.3e} exceeds {SHEAR_TOLERANCE})"
        )
    cy = math.hypot(rot[0, 0], rot[1, 0])
    if cy < _GIMBAL_TOLERANCE:
        raise DecompositionError("gimbal lock: |ry| is at pi/2, Euler angles are ambiguous")
    ry = math.atan2(-rot[2, 0], cy)
    rx = math.atan2(rot[2, 1], rot[2, 2])
    rz = math.atan2(rot[1, 0], rot[0, 0])
    t = matrix.translation
    return AffineParams9(
        (t[0], t[1], t[2]), (rx, ry, rz), (scales[0], scales[1], scales[2])
    )


def apply_transform(matrix: AffineMatrix, pts: PointSet) -> PointSet:
    """Transform every point: ``linear @ p + translation``, order preserved."""
    out = pts.coords @ matrix.linear.T + matrix.translation
    return PointSet(out, pts.names)


def transform_array(matrix: AffineMatrix, coords: np.ndarray) -> np.ndarray:
    """Array-level variant of :func:`apply_transform` for internal math."""
    return coords @ matrix.linear.T + matrix.translation


def require_correspondence(moving: PointSet, fixed: PointSet) -> None:
    """Raise unless the two sets pair element-wise by length."""
    if len(moving) != len(fixed):
        raise CorrespondenceError(
            f"point sets differ in size: {len(moving)} moving vs {len(fixed)} fixed"
        )
