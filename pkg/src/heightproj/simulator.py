"""Synthetic scenes: a ground plane plus oriented boxes, with a LiDAR model.

Everything here is desk-scale test scaffolding: ray-cast point clouds with
seeded noise and dropout, rasterized semantic ground truth, and the two
experiments that compare uniform against height-guided sampling and quantify
height-map error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .grid import PointCloud, VoxelGridSpec, cell_centers_xy
from .heightmap import HeightMap, SemanticVoxelGrid
from .projection import (
    CameraModel,
    ReferencePointSet,
    SamplingConfig,
    project_points,
    sample_height_guided,
    uniform_reference_points,
)

SAMPLING_MODES = ("uniform", "height_guided")

# Tolerance (pixels) for the point-in-hull test; keeps points that land on a
# face of the box, whose projections sit on the hull boundary, counted as in.
_HULL_EPS = 1e-9


@dataclass(frozen=True)
class BoxSpec:
    """Oriented box: center, full size (length, width, height), yaw about +z."""

    center: tuple[float, float, float]
    size: tuple[float, float, float]
    yaw: float
    class_id: int

    def __post_init__(self):
        if any(s <= 0 for s in self.size):
            raise ValueError("box sizes must be positive")
        if not 0 <= self.class_id <= 255:
            raise ValueError("class_id must fit in uint8")

    def corners(self) -> np.ndarray:
        """The 8 box corners in the ego frame, (8, 3)."""
        l, w, h = self.size
        sx = np.array([-0.5, 0.5]) * l
        sy = np.array([-0.5, 0.5]) * w
        sz = np.array([-0.5, 0.5]) * h
        pts = np.array([[x, y, z] for x in sx for y in sy for z in sz])
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return pts @ rot.T + np.asarray(self.center)

    def contains_xy(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Footprint test for BEV positions (broadcasting arrays)."""
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        rx = x - self.center[0]
        ry = y - self.center[1]
        lx = c * rx + s * ry
        ly = -s * rx + c * ry
        return (np.abs(lx) <= self.size[0] * 0.5) & (np.abs(ly) <= self.size[1] * 0.5)


@dataclass(frozen=True)
class GroundSpec:
    z_top: float
    class_id: int

    def __post_init__(self):
        if not 0 <= self.class_id <= 255:
            raise ValueError("class_id must fit in uint8")


@dataclass(frozen=True)
class SceneSpec:
    """Ground plane (optional) plus oriented boxes; later boxes win overlaps."""

    ground: Optional[GroundSpec] = None
    objects: tuple[BoxSpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))


@dataclass(frozen=True)
class LidarSpec:
    """Spinning-sensor model: an azimuth x elevation ray bundle with noise.

    Azimuth samples are spaced ring-style (upper end excluded); elevation
    samples include both endpoints. Gaussian noise of noise_sigma_z is added
    to hit z only, and rays are dropped independently with dropout_prob. All
    randomness is a pure function of (seed, ray index).
    """

    origin: tuple[float, float, float]
    azimuth_range: tuple[float, float] = (0.0, 2.0 * math.pi)
    azimuth_count: int = 360
    elevation_range: tuple[float, float] = (-math.pi / 6, 0.0)
    elevation_count: int = 16
    max_range: float = 100.0
    noise_sigma_z: float = 0.0
    dropout_prob: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.azimuth_count < 1 or self.elevation_count < 1:
            raise ValueError("ray counts must be >= 1")
        if self.max_range <= 0:
            raise ValueError("max_range must be positive")
        if not 0.0 <= self.dropout_prob <= 1.0:
            raise ValueError("dropout_prob must lie in [0, 1]")
        if self.noise_sigma_z < 0:
            raise ValueError("noise_sigma_z must be non-negative")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def directions(self) -> np.ndarray:
        """Unit ray directions, ordered azimuth-major, (n_az * n_el, 3)."""
        az0, az1 = self.azimuth_range
        azs = az0 + (az1 - az0) * np.arange(self.azimuth_count) / self.azimuth_count
        el0, el1 = self.elevation_range
        if self.elevation_count == 1:
            els = np.array([0.5 * (el0 + el1)])
        else:
            els = el0 + (el1 - el0) * np.arange(self.elevation_count) / (self.elevation_count - 1)
        az = np.repeat(azs, self.elevation_count)
        el = np.tile(els, self.azimuth_count)
        d = np.stack([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)], axis=-1)
        return d / np.linalg.norm(d, axis=-1, keepdims=True)


def _box_arrays(objects: Sequence[BoxSpec]):
    n = len(objects)
    centers = np.zeros((n, 3))
    half = np.zeros((n, 3))
    cos_yaw = np.zeros(n)
    sin_yaw = np.zeros(n)
    for i, b in enumerate(objects):
        centers[i] = b.center
        half[i] = np.asarray(b.size) * 0.5
        cos_yaw[i] = math.cos(b.yaw)
        sin_yaw[i] = math.sin(b.yaw)
    return centers, half, cos_yaw, sin_yaw


def raycast_scene(
    scene: SceneSpec,
    origin: Sequence[float],
    direction: Sequence[float],
    max_range: float = math.inf,
) -> Optional[tuple[np.ndarray, int]]:
    """Nearest surface hit of one ray: (hit point, class id), or None.

    The ground half-space is intersected as the plane z = z_top (from either
    side); boxes are slab-tested in their local frame and require the entry
    point to lie strictly ahead of the origin.
    """
    d = np.asarray(direction, dtype=np.float64)
    if abs(np.linalg.norm(d) - 1.0) > 1e-9:
        raise ValueError("direction must be unit length")
    o = np.asarray(origin, dtype=np.float64)
    centers, half, cos_yaw, sin_yaw = _box_arrays(scene.objects)
    t, hit_id = kernels.raycast_rays(
        o, d.reshape(1, 3),
        scene.ground is not None,
        scene.ground.z_top if scene.ground is not None else 0.0,
        centers, half, cos_yaw, sin_yaw, float(max_range),
    )
    if hit_id[0] < 0:
        return None
    cls = scene.ground.class_id if hit_id[0] == len(scene.objects) else scene.objects[hit_id[0]].class_id
    return o + t[0] * d, int(cls)


def simulate_lidar(scene: SceneSpec, lidar: LidarSpec) -> PointCloud:
    """Ray-cast point cloud with seeded z noise and per-ray dropout.

    Bit-deterministic for a fixed seed; ray order never changes the result.
    """
    dirs = lidar.directions()
    origin = np.asarray(lidar.origin, dtype=np.float64)
    centers, half, cos_yaw, sin_yaw = _box_arrays(scene.objects)
    t, hit_id = kernels.raycast_rays(
        origin, dirs,
        scene.ground is not None,
        scene.ground.z_top if scene.ground is not None else 0.0,
        centers, half, cos_yaw, sin_yaw, lidar.max_range,
    )
    u_drop, normal = kernels.ray_randoms(lidar.seed, dirs.shape[0])
    keep = (hit_id >= 0) & (u_drop >= lidar.dropout_prob)
    pts = origin + t[keep, None] * dirs[keep]
    pts[:, 2] += lidar.noise_sigma_z * normal[keep]
    return PointCloud(pts)


def rasterize_gt(scene: SceneSpec, spec: VoxelGridSpec, free_class: int = 255) -> SemanticVoxelGrid:
    """Semantic voxel labels from voxel-center membership tests.

    A center inside an object takes its class (later objects win); otherwise
    centers at or below the ground plane take the ground class; everything
    else is free.
    """
    for obj in scene.objects:
        if obj.class_id == free_class:
            raise ValueError("object class_id equals the free class")
    if scene.ground is not None and scene.ground.class_id == free_class:
        raise ValueError("ground class_id equals the free class")

    cx, cy = cell_centers_xy(spec)
    cz = spec.z_min + (np.arange(spec.nz, dtype=np.float64) + 0.5) * spec.delta_z
    labels = np.full(spec.shape, free_class, dtype=np.uint8)
    if scene.ground is not None:
        labels[:, :, cz <= scene.ground.z_top] = scene.ground.class_id
    gx = cx[:, None, None]
    gy = cy[None, :, None]
    gz = cz[None, None, :]
    for obj in scene.objects:
        inside_xy = obj.contains_xy(gx, gy)
        lz = gz - obj.center[2]
        inside = inside_xy & (np.abs(lz) <= obj.size[2] * 0.5)
        labels[inside] = obj.class_id
    return SemanticVoxelGrid(spec, labels, free_class)


def _convex_hull(points: np.ndarray) -> np.ndarray:
    """Counter-clockwise convex hull of (n, 2) points (monotone chain)."""
    pts = sorted(map(tuple, points))
    if len(pts) <= 2:
        return np.asarray(pts, dtype=np.float64)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.asarray(lower[:-1] + upper[:-1], dtype=np.float64)


def _points_in_hull(hull: np.ndarray, uv: np.ndarray, eps: float = _HULL_EPS) -> np.ndarray:
    """Inclusive membership of (n, 2) points in a CCW convex polygon."""
    if hull.shape[0] < 3:
        return np.zeros(uv.shape[0], dtype=np.bool_)
    inside = np.ones(uv.shape[0], dtype=np.bool_)
    for i in range(hull.shape[0]):
        a = hull[i]
        b = hull[(i + 1) % hull.shape[0]]
        cross = (b[0] - a[0]) * (uv[:, 1] - a[1]) - (b[1] - a[1]) * (uv[:, 0] - a[0])
        inside &= cross >= -eps
    return inside


@dataclass(frozen=True)
class HitRateResult:
    hit_rate: float
    n_cells: int
    n_points: int
    records: np.ndarray  # structured: i_x, i_y, j, z, x, y, u, v, in_frustum, in_hull, hit


_RECORD_DTYPE = np.dtype([
    ("i_x", np.int64), ("i_y", np.int64), ("j", np.int64),
    ("z", np.float64), ("x", np.float64), ("y", np.float64),
    ("u", np.float64), ("v", np.float64),
    ("in_frustum", np.bool_), ("in_hull", np.bool_), ("hit", np.bool_),
])


def hitrate_experiment(
    scene: SceneSpec,
    camera: CameraModel,
    spec: VoxelGridSpec,
    cfg: SamplingConfig,
    mode: str,
    height_source: Optional[HeightMap] = None,
) -> HitRateResult:
    """Fraction of reference points that project into their object's silhouette.

    Every BEV cell whose center lies in some object's footprint contributes
    its vertical samples (uniform, or guided by height_source; guided skips
    cells with no height). A point hits when its projection is in-frustum and
    inside the convex hull of the 8 projected corners of the cell's object.
    """
    if mode not in SAMPLING_MODES:
        raise ValueError(f"mode must be one of {SAMPLING_MODES}")
    if not scene.objects:
        raise ValueError("scene has no objects")
    if mode == "height_guided":
        if height_source is None:
            raise ValueError("height_guided mode needs a height_source map")
        refs = sample_height_guided(height_source, cfg)
    else:
        refs = uniform_reference_points(spec, cfg)

    cx, cy = cell_centers_xy(spec)
    gx = np.broadcast_to(cx[:, None], spec.bev_shape)
    gy = np.broadcast_to(cy[None, :], spec.bev_shape)
    owner = np.full(spec.bev_shape, -1, dtype=np.int64)
    for i, obj in enumerate(scene.objects):
        owner[obj.contains_xy(gx, gy)] = i
    if (owner < 0).all():
        raise ValueError("no BEV cell lies inside an object footprint")

    hulls = []
    for obj in scene.objects:
        uv, ok = project_points(camera, obj.corners())
        behind = camera.rotation[2] @ (obj.corners() - camera.camera_center()).T <= 0
        if behind.any():
            raise ValueError("object corners behind the camera; hull is undefined")
        hulls.append(_convex_hull(uv))

    cells = np.nonzero((owner >= 0) & refs.valid)
    n_z = refs.n_z
    rows = np.zeros(cells[0].size * n_z, dtype=_RECORD_DTYPE)
    hits = 0
    total = 0
    r = 0
    for ix, iy in zip(*cells):
        pts = refs.points[ix, iy]
        uv, infr = project_points(camera, pts)
        in_hull = _points_in_hull(hulls[owner[ix, iy]], uv)
        for j in range(n_z):
            hit = bool(infr[j]) and bool(in_hull[j])
            rows[r] = (ix, iy, j, pts[j, 2], pts[j, 0], pts[j, 1],
                       uv[j, 0], uv[j, 1], bool(infr[j]), bool(in_hull[j]), hit)
            hits += hit
            total += 1
            r += 1
    if total == 0:
        raise ValueError("no reference points were generated for footprint cells")
    return HitRateResult(hits / total, int(cells[0].size), total, rows)


@dataclass(frozen=True)
class HeightErrorStats:
    mean_abs: float
    n_cells: int
    bin_centers: np.ndarray
    counts: np.ndarray


def height_error_stats(h_lidar: HeightMap, h_gt: HeightMap) -> HeightErrorStats:
    """Signed-error histogram and mean |error| over cells valid in both maps.

    Histogram bins are one vertical resolution wide, centered on integer
    multiples of delta_z.
    """
    if h_lidar.spec != h_gt.spec:
        raise ValueError("height maps use different grid specs")
    both = h_lidar.valid & h_gt.valid
    if not both.any():
        raise ValueError("no cell is valid in both maps")
    diff = h_lidar.values[both] - h_gt.values[both]
    dz = h_lidar.spec.delta_z
    k_lo = int(round(diff.min() / dz))
    k_hi = int(round(diff.max() / dz))
    edges = (np.arange(k_lo, k_hi + 2) - 0.5) * dz
    counts, _ = np.histogram(diff, bins=edges)
    centers = np.arange(k_lo, k_hi + 1) * dz
    return HeightErrorStats(float(np.abs(diff).mean()), int(both.sum()), centers, counts)
