"""Occupancy metrics: voxel-wise semantic IoU and a ray-based first-hit IoU.

The ray metric casts query rays through both grids, takes the first non-free
voxel on each side, and scores a ray as a true positive for class c when both
sides hit c with entry depths within a distance threshold. Per-threshold
scores are averaged over classes, then over thresholds. Depth is measured to
the voxel entry plane produced by exact grid traversal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .grid import VoxelGridSpec
from .heightmap import SemanticVoxelGrid

DEFAULT_THRESHOLDS = (1.0, 2.0, 4.0)


@dataclass(frozen=True)
class ConfusionCounts:
    """Per-class voxel tallies: intersection, prediction count, truth count."""

    classes: tuple[int, ...]
    intersection: np.ndarray
    pred_count: np.ndarray
    gt_count: np.ndarray

    def __post_init__(self):
        n = len(self.classes)
        for arr in (self.intersection, self.pred_count, self.gt_count):
            if arr.shape != (n,):
                raise ValueError("tally arrays must align with the class list")
        if (self.intersection > np.minimum(self.pred_count, self.gt_count)).any():
            raise ValueError("intersection cannot exceed either marginal count")
        if (self.intersection < 0).any() or (self.pred_count < 0).any() or (self.gt_count < 0).any():
            raise ValueError("tallies must be non-negative")


@dataclass(frozen=True)
class RayQuery:
    origin: np.ndarray
    direction: np.ndarray
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        direction = np.asarray(self.direction, dtype=np.float64).reshape(3)
        if not np.isfinite(origin).all():
            raise ValueError("ray origin must be finite")
        if abs(np.linalg.norm(direction) - 1.0) > 1e-9:
            raise ValueError("ray direction must be unit length")
        thresholds = tuple(float(t) for t in self.thresholds)
        if not thresholds or any(t <= 0 for t in thresholds):
            raise ValueError("thresholds must be positive")
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError("thresholds must be strictly increasing")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "direction", direction)
        object.__setattr__(self, "thresholds", thresholds)


@dataclass(frozen=True)
class RayIoUResult:
    per_threshold: dict[float, float]
    mean: float


def confusion(pred: SemanticVoxelGrid, gt: SemanticVoxelGrid, ignore_free: bool = True) -> ConfusionCounts:
    """Voxel tallies per class; with ignore_free the free id is not a class."""
    if pred.spec != gt.spec:
        raise ValueError("grids use different specs")
    if pred.free_class != gt.free_class:
        raise ValueError("grids disagree on the free class id")
    p = pred.labels.ravel().astype(np.int64)
    g = gt.labels.ravel().astype(np.int64)
    inter = np.bincount(g[p == g], minlength=256)
    pc = np.bincount(p, minlength=256)
    gc = np.bincount(g, minlength=256)
    present = np.flatnonzero((pc > 0) | (gc > 0))
    if ignore_free:
        present = present[present != pred.free_class]
    classes = tuple(int(c) for c in present)
    return ConfusionCounts(classes, inter[present], pc[present], gc[present])


def miou(counts: ConfusionCounts) -> tuple[float, dict[int, float]]:
    """Mean IoU over classes with a non-empty union, plus per-class values."""
    per_class: dict[int, float] = {}
    for c, inter, pc, gc in zip(counts.classes, counts.intersection, counts.pred_count, counts.gt_count):
        union = pc + gc - inter
        if union > 0:
            per_class[c] = float(inter / union)
    if not per_class:
        raise ValueError("no class has a non-empty union; mIoU is undefined")
    return float(np.mean(list(per_class.values()))), per_class


def ray_first_hit(grid: SemanticVoxelGrid, query: RayQuery) -> Optional[tuple[int, float]]:
    """First non-free voxel along the ray: (class, entry depth), or None.

    Depth is the distance from the origin to the point where the ray enters
    the hit voxel (0 when the origin already lies inside it).
    """
    cls, depth = kernels.ray_first_hit_batch(
        grid.labels, grid.spec.x_min, grid.spec.y_min, grid.spec.z_min,
        grid.spec.delta_xy, grid.spec.delta_z,
        query.origin.reshape(1, 3), query.direction.reshape(1, 3),
        grid.free_class,
    )
    if cls[0] < 0:
        return None
    return int(cls[0]), float(depth[0])


def ray_voxel_sequence(spec: VoxelGridSpec, origin: Sequence[float], direction: Sequence[float]) -> np.ndarray:
    """Exact visitation order of voxels along a ray, (m, 3) int64. Diagnostic."""
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    return kernels.ray_voxels(
        spec.shape, spec.x_min, spec.y_min, spec.z_min, spec.delta_xy, spec.delta_z,
        o[0], o[1], o[2], d[0], d[1], d[2],
    )


def rayiou(pred: SemanticVoxelGrid, gt: SemanticVoxelGrid, queries: Sequence[RayQuery]) -> RayIoUResult:
    """Ray-based IoU at each distance threshold plus their mean."""
    if pred.spec != gt.spec:
        raise ValueError("grids use different specs")
    if not queries:
        raise ValueError("need at least one ray query")
    thresholds = queries[0].thresholds
    if any(q.thresholds != thresholds for q in queries):
        raise ValueError("all queries must share one threshold list")

    origins = np.stack([q.origin for q in queries])
    dirs = np.stack([q.direction for q in queries])
    geom = (pred.spec.x_min, pred.spec.y_min, pred.spec.z_min, pred.spec.delta_xy, pred.spec.delta_z)
    cls_p, d_p = kernels.ray_first_hit_batch(pred.labels, *geom, origins, dirs, pred.free_class)
    cls_g, d_g = kernels.ray_first_hit_batch(gt.labels, *geom, origins, dirs, gt.free_class)

    classes = np.union1d(cls_p[cls_p >= 0], cls_g[cls_g >= 0])
    per_threshold: dict[float, float] = {}
    for tau in thresholds:
        matched = (cls_p >= 0) & (cls_p == cls_g) & (np.abs(d_p - d_g) <= tau)
        ious = []
        for c in classes:
            tp = int(np.count_nonzero(matched & (cls_p == c)))
            fp = int(np.count_nonzero((cls_p == c) & ~matched))
            fn = int(np.count_nonzero((cls_g == c) & ~matched))
            denom = tp + fp + fn
            if denom > 0:
                ious.append(tp / denom)
        per_threshold[tau] = float(np.mean(ious)) if ious else math.nan
    finite = [v for v in per_threshold.values() if not math.isnan(v)]
    if not finite:
        raise ValueError("no ray hit either grid; ray IoU is undefined")
    return RayIoUResult(per_threshold, float(np.mean(finite)))


def ray_fan(
    origin: Sequence[float] = (0.0, 0.0, 0.0),
    n_azimuth: int = 72,
    n_elevation: int = 8,
    elevation_range: tuple[float, float] = (-math.pi / 6, math.pi / 18),
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> list[RayQuery]:
    """Default query set: an azimuth ring crossed with an elevation fan.

    A stand-in for benchmark-specific ray sets; callers with real sensor rays
    should pass those instead.
    """
    if n_azimuth < 1 or n_elevation < 1:
        raise ValueError("ray counts must be >= 1")
    queries = []
    thresholds = tuple(float(t) for t in thresholds)
    for ia in range(n_azimuth):
        az = 2.0 * math.pi * ia / n_azimuth
        for ie in range(n_elevation):
            if n_elevation == 1:
                el = 0.5 * (elevation_range[0] + elevation_range[1])
            else:
                el = elevation_range[0] + (elevation_range[1] - elevation_range[0]) * ie / (n_elevation - 1)
            d = np.array([
                math.cos(el) * math.cos(az),
                math.cos(el) * math.sin(az),
                math.sin(el),
            ])
            d /= np.linalg.norm(d)
            queries.append(RayQuery(np.asarray(origin, dtype=np.float64), d, thresholds))
    return queries
