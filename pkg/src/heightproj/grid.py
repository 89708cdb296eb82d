"""Voxel grid geometry: the shared spatial discretization and index arithmetic.

Conventions used everywhere in this package:

* The region of interest is the half-open box ``[x_min, x_max) x [y_min,
  y_max) x [z_min, z_max)``; points exactly on an upper bound are outside.
* Cell counts are derived from bounds and resolutions, never trusted from
  files.
* Linearized indices: BEV cell ``i_x * ny + i_y``; voxel
  ``(i_x * ny + i_y) * nz + i_z``. Arrays are therefore laid out C-contiguous
  with axes ``(x, y, z)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

_DIM_TOL = 1e-9

_SPEC_KEYS = ("x_min", "x_max", "y_min", "y_max", "z_min", "z_max", "delta_xy", "delta_z")


class VoxelIndex(NamedTuple):
    i_x: int
    i_y: int
    i_z: int


@dataclass(frozen=True)
class VoxelGridSpec:
    """Axis-aligned voxel grid: metric bounds plus horizontal/vertical resolution."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    z_min: float
    z_max: float
    delta_xy: float
    delta_z: float
    nx: int = field(init=False)
    ny: int = field(init=False)
    nz: int = field(init=False)

    def __post_init__(self):
        for lo, hi, name in (
            (self.x_min, self.x_max, "x"),
            (self.y_min, self.y_max, "y"),
            (self.z_min, self.z_max, "z"),
        ):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"invalid {name} bounds: [{lo}, {hi})")
        if not (self.delta_xy > 0 and self.delta_z > 0):
            raise ValueError("resolutions must be positive")
        object.__setattr__(self, "nx", self._count(self.x_min, self.x_max, self.delta_xy, "x"))
        object.__setattr__(self, "ny", self._count(self.y_min, self.y_max, self.delta_xy, "y"))
        object.__setattr__(self, "nz", self._count(self.z_min, self.z_max, self.delta_z, "z"))

    @staticmethod
    def _count(lo: float, hi: float, delta: float, name: str) -> int:
        exact = (hi - lo) / delta
        n = round(exact)
        if abs(n - exact) > _DIM_TOL:
            raise ValueError(
                f"{name} extent {hi - lo} is not an integer multiple of {delta} "
                f"(quotient {exact})"
            )
        if n < 1:
            raise ValueError(f"{name} axis has no cells")
        return int(n)

    @property
    def bev_shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    def to_json(self) -> str:
        return json.dumps({k: float(getattr(self, k)) for k in _SPEC_KEYS}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "VoxelGridSpec":
        data = json.loads(text)
        missing = [k for k in _SPEC_KEYS if k not in data]
        if missing:
            raise ValueError(f"grid spec is missing keys: {missing}")
        return cls(**{k: float(data[k]) for k in _SPEC_KEYS})


@dataclass(frozen=True)
class PointCloud:
    """Ego-frame points, shape (n, 3) float64. Coordinates must be finite."""

    xyz: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.xyz, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"expected (n, 3) points, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "xyz", arr)

    def __len__(self) -> int:
        return self.xyz.shape[0]

    @classmethod
    def from_points(cls, points: Sequence[Sequence[float]]) -> "PointCloud":
        arr = np.asarray(list(points), dtype=np.float64)
        if arr.size == 0:
            arr = arr.reshape(0, 3)
        return cls(arr)


def voxel_index(p: Sequence[float], spec: VoxelGridSpec) -> Optional[VoxelIndex]:
    """Voxel containing point ``p``, or None when p is outside the half-open box."""
    x, y, z = float(p[0]), float(p[1]), float(p[2])
    if not (spec.x_min <= x < spec.x_max and spec.y_min <= y < spec.y_max and spec.z_min <= z < spec.z_max):
        return None
    i_x = int(math.floor((x - spec.x_min) / spec.delta_xy))
    i_y = int(math.floor((y - spec.y_min) / spec.delta_xy))
    i_z = int(math.floor((z - spec.z_min) / spec.delta_z))
    # Division can round up to the cell count when a coordinate sits a hair
    # below the upper bound; clamp back into range.
    i_x = min(i_x, spec.nx - 1)
    i_y = min(i_y, spec.ny - 1)
    i_z = min(i_z, spec.nz - 1)
    return VoxelIndex(i_x, i_y, i_z)


def voxel_center(idx: Sequence[int], spec: VoxelGridSpec) -> tuple[float, float, float]:
    """Metric center of the voxel at ``idx``."""
    i_x, i_y, i_z = int(idx[0]), int(idx[1]), int(idx[2])
    if not (0 <= i_x < spec.nx and 0 <= i_y < spec.ny and 0 <= i_z < spec.nz):
        raise IndexError(f"voxel index {(i_x, i_y, i_z)} outside grid {spec.shape}")
    return (
        spec.x_min + (i_x + 0.5) * spec.delta_xy,
        spec.y_min + (i_y + 0.5) * spec.delta_xy,
        spec.z_min + (i_z + 0.5) * spec.delta_z,
    )


def cell_centers_xy(spec: VoxelGridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis BEV cell center coordinates, shapes (nx,) and (ny,)."""
    cx = spec.x_min + (np.arange(spec.nx, dtype=np.float64) + 0.5) * spec.delta_xy
    cy = spec.y_min + (np.arange(spec.ny, dtype=np.float64) + 0.5) * spec.delta_xy
    return cx, cy
