"""BEV height maps from point clouds and from semantic voxel grids.

A pillar's height is the upper boundary of its highest occupied voxel,
``z_min + (i_z* + 1) * delta_z``. Pillars with no occupied voxel are invalid:
the mask is False and the stored value is NaN.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .grid import PointCloud, VoxelGridSpec


@dataclass(frozen=True)
class BinaryOccupancyGrid:
    spec: VoxelGridSpec
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.bool_)
        if bits.shape != self.spec.shape:
            raise ValueError(f"occupancy shape {bits.shape} != grid {self.spec.shape}")
        object.__setattr__(self, "bits", bits)


@dataclass(frozen=True)
class HeightMap:
    """Per-BEV-cell metric height with an explicit validity mask.

    values: (nx, ny) float64, NaN wherever valid is False.
    """

    spec: VoxelGridSpec
    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        valid = np.asarray(self.valid, dtype=np.bool_)
        if values.shape != self.spec.bev_shape or valid.shape != self.spec.bev_shape:
            raise ValueError(
                f"height map shapes {values.shape}/{valid.shape} != grid {self.spec.bev_shape}"
            )
        if not np.isfinite(values[valid]).all():
            raise ValueError("valid cells must hold finite heights")
        values = values.copy()
        values[~valid] = np.nan
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)

    @classmethod
    def full_of(cls, spec: VoxelGridSpec, value: float) -> "HeightMap":
        """Everywhere-valid map holding one constant height."""
        return cls(spec, np.full(spec.bev_shape, float(value)), np.ones(spec.bev_shape, np.bool_))


@dataclass(frozen=True)
class SemanticVoxelGrid:
    """Dense voxel class labels with a distinguished free (empty-space) id."""

    spec: VoxelGridSpec
    labels: np.ndarray
    free_class: int = 255

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.shape != self.spec.shape:
            raise ValueError(f"label shape {labels.shape} != grid {self.spec.shape}")
        if labels.dtype != np.uint8:
            if labels.size and (labels.min() < 0 or labels.max() > 255):
                raise ValueError("labels must fit in uint8")
            labels = labels.astype(np.uint8)
        if not 0 <= self.free_class <= 255:
            raise ValueError("free_class must fit in uint8")
        object.__setattr__(self, "labels", labels)

    def occupied(self) -> np.ndarray:
        return self.labels != np.uint8(self.free_class)


def build_occupancy(points: PointCloud, spec: VoxelGridSpec) -> BinaryOccupancyGrid:
    """Binary occupancy: a voxel is set iff at least one point falls in it."""
    bits = kernels.occupancy_from_points(
        points.xyz, spec.x_min, spec.y_min, spec.z_min,
        spec.delta_xy, spec.delta_z, spec.nx, spec.ny, spec.nz,
    )
    return BinaryOccupancyGrid(spec, bits)


def _collapse(spec: VoxelGridSpec, occupied_bits: np.ndarray) -> HeightMap:
    top = kernels.collapse_top_index(np.ascontiguousarray(occupied_bits))
    valid = top >= 0
    values = spec.z_min + (top + 1).astype(np.float64) * spec.delta_z
    values[~valid] = np.nan
    return HeightMap(spec, values, valid)


def collapse_height(grid: BinaryOccupancyGrid) -> HeightMap:
    """Collapse a pillar to the top face of its highest occupied voxel."""
    return _collapse(grid.spec, grid.bits)


def heightmap_from_points(points: PointCloud, spec: VoxelGridSpec) -> HeightMap:
    """Voxelize then collapse; equals collapse_height(build_occupancy(...))."""
    return collapse_height(build_occupancy(points, spec))


def heightmap_from_semantic(gt: SemanticVoxelGrid) -> HeightMap:
    """Height map of a semantic grid; occupied means label != free_class."""
    return _collapse(gt.spec, gt.occupied())
