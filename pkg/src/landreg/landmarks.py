"""Distance maps, label maps, and landmark extraction on voxel grids.

The distance transform is the exact Euclidean one, computed per axis with
the lower-envelope-of-parabolas scan over squared distances. Distances are
measured between voxel centers in world units, so anisotropic spacing is
honored. Label maps rescale a landmark's distance map into (0, 1] with
``exp(-10 * M / max(M))``, making the landmark voxel exactly 1 and the far
corner ``exp(-10)``. Recovery is the inverse: the argmax voxel center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Point3, Volume3
from .errors import (
    DegenerateGeometryError,
    InvalidDataError,
    NoFeatureError,
    OutOfBoundsError,
)

LABEL_DECAY = 10.0  # exponent factor in the label map
LABEL_FLOOR = math.exp(-LABEL_DECAY)


@dataclass(frozen=True)
class BinaryMask:
    """A volume restricted to {0, 1} voxel values."""

    volume: Volume3

    def __post_init__(self):
        data = self.volume.data
        if not np.all((data == 0.0) | (data == 1.0)):
            bad = data[(data != 0.0) & (data != 1.0)]
            raise InvalidDataError(
                f"mask contains {bad.size} voxels outside {{0, 1}} (first: {bad.flat[0]!r})"
            )

    @property
    def feature_count(self) -> int:
        return int(np.count_nonzero(self.volume.data))


@dataclass(frozen=True)
class DistanceMap:
    """Per-voxel exact Euclidean distance (mm) to the nearest feature voxel."""

    volume: Volume3

    def __post_init__(self):
        if np.any(self.volume.data < 0.0) or not np.all(np.isfinite(self.volume.data)):
            raise InvalidDataError("distance map values must be finite and non-negative")


@dataclass(frozen=True)
class LabelMap:
    """A normalized landmark map valued in [exp(-10), 1], 1 at the landmark."""

    volume: Volume3

    def __post_init__(self):
        data = self.volume.data
        if data.max(initial=-np.inf) != 1.0:
            raise InvalidDataError("label map maximum must be exactly 1")
        if np.any(data < LABEL_FLOOR) or np.any(data > 1.0):
            raise InvalidDataError("label map values must lie in [exp(-10), 1]")


def _envelope_pass(f: np.ndarray, step: float) -> np.ndarray:
    """One 1D pass of the squared-distance transform.

    ``f`` holds squared distances at sites i * step (may contain +inf for
    absent sites). Returns ``min_q ((p - q) * step)^2 + f[q]`` for every p,
    via the linear-time lower envelope of the parabolas rooted at the
    finite sites.
    """
    n = f.size
    out = np.full(n, np.inf)
    v = np.zeros(n, dtype=np.intp)  # parabola site index per envelope segment
    z = np.zeros(n + 1)  # segment boundaries in world units
    k = -1
    s = 0.0
    for q in range(n):
        fq = f[q]
        if fq == np.inf:
            continue
        x = q * step
        while k >= 0:
            xv = v[k] * step
            s = (fq + x * x - f[v[k]] - xv * xv) / (2.0 * (x - xv))
            if s <= z[k]:
                k -= 1
            else:
                break
        k += 1
        v[k] = q
        z[k] = -np.inf if k == 0 else s
        z[k + 1] = np.inf
    if k < 0:
        return out  # no finite site on this line
    j = 0
    for q in range(n):
        x = q * step
        while z[j + 1] < x:
            j += 1
        d = (q - v[j]) * step
        out[q] = d * d + f[v[j]]
    return out


def _squared_edt(feature3d: np.ndarray, spacing: tuple[float, float, float]) -> np.ndarray:
    """Exact squared EDT of a (nz, ny, nx) boolean feature array."""
    sx, sy, sz = spacing
    nz, ny, nx = feature3d.shape
    d2 = np.where(feature3d, 0.0, np.inf)
    for iz in range(nz):  # scan along x
        for iy in range(ny):
            d2[iz, iy, :] = _envelope_pass(d2[iz, iy, :], sx)
    for iz in range(nz):  # along y
        for ix in range(nx):
            d2[iz, :, ix] = _envelope_pass(d2[iz, :, ix], sy)
    for iy in range(ny):  # along z
        for ix in range(nx):
            d2[:, iy, ix] = _envelope_pass(d2[:, iy, ix], sz)
    return d2


def distance_transform(mask: BinaryMask) -> DistanceMap:
    """Exact Euclidean distance (mm) from every voxel to the nearest feature.

    Runs three separable lower-envelope passes over squared distances and
    takes one square root at the end, so the result matches a brute-force
    nearest-feature scan to floating-point accuracy.

    Raises :class:`NoFeatureError` if the mask has no feature voxel.
    """
    vol = mask.volume
    feature = vol.data3d() > 0.5
    if not feature.any():
        raise NoFeatureError("mask contains no feature voxels")
    d2 = _squared_edt(feature, vol.spacing)
    return DistanceMap(vol.with_data(np.sqrt(d2)))


def make_label(landmark: Point3, template: Volume3) -> LabelMap:
    """Build the normalized landmark map ``exp(-10 * M / max(M))``.

    The landmark is snapped to the nearest voxel center of ``template``
    (whose data is ignored, only its geometry is used), M is the exact
    distance map of that single-voxel feature, and max(M) is the global
    maximum over the volume. The landmark voxel gets exactly 1.

    Raises :class:`OutOfBoundsError` if the landmark snaps outside the
    grid, and :class:`DegenerateGeometryError` on a single-voxel volume,
    where max(M) = 0 leaves the map undefined.
    """
    ix, iy, iz = template.nearest_voxel(landmark)
    if not template.contains_voxel(ix, iy, iz):
        raise OutOfBoundsError(
            f"landmark ({landmark.x}, {landmark.y}, {landmark.z}) mm falls outside "
            f"the volume (nearest voxel ({ix}, {iy}, {iz}) of dims {template.dims})"
        )
    seed = np.zeros(template.dims[::-1], dtype=bool)
    seed[iz, iy, ix] = True
    dist = np.sqrt(_squared_edt(seed, template.spacing))
    peak = dist.max()
    if peak == 0.0:
        raise DegenerateGeometryError(
            "single-voxel volume: max distance is zero, label map is undefined"
        )
    # ratio first: dist/peak is exactly 1 at the farthest voxel, so the
    # exponent never rounds below -LABEL_DECAY and the floor is exact
    label = np.exp(-LABEL_DECAY * (dist / peak))
    return LabelMap(template.with_data(label))


def recover_landmark(heatmap: Volume3) -> Point3:
    """World coordinate of the maximum-valued voxel.

    Ties resolve to the smallest linear index. This inverts
    :func:`make_label` exactly: the recovered point is the voxel center
    the landmark was snapped to.
    """
    data = heatmap.data
    if np.any(np.isnan(data)):
        raise InvalidDataError("heatmap contains NaN values")
    idx = int(np.argmax(data))
    return heatmap.voxel_center(*heatmap.voxel_of_index(idx))


def extract_extremes(mask: BinaryMask, axis: int = 0) -> tuple[Point3, Point3]:
    """Feature voxels with the smallest and largest world coordinate on ``axis``.

    Defaults to the x axis (index 0), i.e. the left-most and right-most
    feature points of an axial view. Ties resolve to the smallest linear
    index. A single-feature mask returns the same point twice.
    """
    if axis not in (0, 1, 2):
        raise InvalidDataError(f"axis must be 0, 1, or 2, got {axis}")
    vol = mask.volume
    flat = np.flatnonzero(vol.data)
    if flat.size == 0:
        raise NoFeatureError("mask contains no feature voxels")
    nx, ny, _ = vol.dims
    if axis == 0:
        along = flat % nx
    elif axis == 1:
        along = (flat // nx) % ny
    else:
        along = flat // (nx * ny)
    # argmin/argmax return the first occurrence; flat indices are ascending,
    # which realizes the smallest-linear-index tie-break.
    lo = int(flat[np.argmin(along)])
    hi = int(flat[np.argmax(along)])
    return (
        vol.voxel_center(*vol.voxel_of_index(lo)),
        vol.voxel_center(*vol.voxel_of_index(hi)),
    )
