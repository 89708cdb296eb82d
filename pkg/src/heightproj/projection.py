"""Vertical sampling, pinhole projection, and the masked aggregation kernel.

Reference points sit on BEV cell centers in x, y. Vertical locations are the
affine family ``z_min + alpha_j * (upper - z_min)`` with
``alpha_j = (j - 1) / (n_z - 1)``: uniform sampling uses ``upper = z_max``
for every pillar, height-guided sampling uses the pillar's conditioned height
instead, and pillars with no height are masked out entirely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .grid import VoxelGridSpec, cell_centers_xy
from .heightmap import HeightMap

_ROT_TOL = 1e-9


@dataclass(frozen=True)
class SamplingConfig:
    """Vertical sample count per pillar; at least 2 (the endpoints)."""

    n_z: int = 4

    def __post_init__(self):
        if self.n_z < 2:
            raise ValueError("n_z must be >= 2")

    @property
    def alphas(self) -> np.ndarray:
        return np.arange(self.n_z, dtype=np.float64) / (self.n_z - 1)


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics plus a rigid ego-to-camera transform.

    Camera frame: +z forward (in front of the sensor), pixel u along +x,
    pixel v along +y. ``rotation`` and ``translation`` map ego points p to
    camera points R p + t.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("image size must be at least 1x1")
        rot = np.asarray(self.rotation, dtype=np.float64)
        trans = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if rot.shape != (3, 3):
            raise ValueError("rotation must be 3x3")
        if np.abs(rot @ rot.T - np.eye(3)).max() > _ROT_TOL or abs(np.linalg.det(rot) - 1.0) > _ROT_TOL:
            raise ValueError("rotation must be orthonormal with determinant +1")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

    def camera_center(self) -> np.ndarray:
        """Camera position in the ego frame (-R^T t)."""
        return -self.rotation.T @ self.translation


@dataclass(frozen=True)
class ReferencePointSet:
    """Per-pillar vertical samples and their 3D ego-frame points.

    heights: (nx, ny, n_z) float64, NaN rows where valid is False;
    points: (nx, ny, n_z, 3) with x, y fixed to the cell center.
    """

    spec: VoxelGridSpec
    heights: np.ndarray
    points: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        nx, ny = self.spec.bev_shape
        if self.heights.ndim != 3 or self.heights.shape[:2] != (nx, ny):
            raise ValueError(f"heights shape {self.heights.shape} does not match grid")
        if self.points.shape != (*self.heights.shape, 3):
            raise ValueError("points shape must be heights shape + (3,)")
        if self.valid.shape != (nx, ny):
            raise ValueError("valid mask shape does not match grid")

    @property
    def n_z(self) -> int:
        return self.heights.shape[2]

    def cell_heights(self, i_x: int, i_y: int) -> np.ndarray:
        """Sample heights for one cell; empty for invalid cells."""
        if not self.valid[i_x, i_y]:
            return np.empty(0, dtype=np.float64)
        return self.heights[i_x, i_y]


@dataclass(frozen=True)
class ImageFeatureMap:
    """Dense (h, w, c) features plus the pixel-to-feature scale factor."""

    data: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if data.ndim != 3:
            raise ValueError("feature map must be (h, w, c)")
        if not np.isfinite(data).all():
            raise ValueError("feature map must be finite")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        object.__setattr__(self, "data", data)


def validity_mask(h: HeightMap) -> np.ndarray:
    """Boolean (nx, ny) mask of pillars with a defined height."""
    return h.valid.copy()


def _affine_heights(z_min: float, upper: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """Heights z_min + alpha * (upper - z_min), endpoints forced exact."""
    out = z_min + alphas * (np.asarray(upper, dtype=np.float64)[..., None] - z_min)
    out[..., 0] = z_min
    out[..., -1] = upper
    return out


def sample_uniform(spec: VoxelGridSpec, cfg: SamplingConfig) -> np.ndarray:
    """The n_z vertical locations shared by every pillar, spanning [z_min, z_max]."""
    return _affine_heights(spec.z_min, np.float64(spec.z_max), cfg.alphas)


def _reference_points(spec: VoxelGridSpec, heights: np.ndarray, valid: np.ndarray) -> ReferencePointSet:
    nx, ny = spec.bev_shape
    n_z = heights.shape[2]
    cx, cy = cell_centers_xy(spec)
    points = np.empty((nx, ny, n_z, 3), dtype=np.float64)
    points[..., 0] = cx[:, None, None]
    points[..., 1] = cy[None, :, None]
    points[..., 2] = heights
    heights = heights.copy()
    heights[~valid] = np.nan
    points[~valid] = np.nan
    return ReferencePointSet(spec, heights, points, valid.copy())


def uniform_reference_points(spec: VoxelGridSpec, cfg: SamplingConfig) -> ReferencePointSet:
    """Every pillar sampled over the full [z_min, z_max] range."""
    nx, ny = spec.bev_shape
    shared = sample_uniform(spec, cfg)
    heights = np.broadcast_to(shared, (nx, ny, cfg.n_z)).copy()
    return _reference_points(spec, heights, np.ones((nx, ny), dtype=np.bool_))


def sample_height_guided(h: HeightMap, cfg: SamplingConfig) -> ReferencePointSet:
    """Per-pillar samples spanning [z_min, height]; invalid pillars get none."""
    spec = h.spec
    upper = np.where(h.valid, h.values, spec.z_max)
    heights = _affine_heights(spec.z_min, upper, cfg.alphas)
    return _reference_points(spec, heights, h.valid)


def project(camera: CameraModel, p: Sequence[float]) -> tuple[float, float, bool]:
    """Pixel coordinates of one ego-frame point plus an in-frustum flag.

    The (u, v) pair is returned even when invalid (behind the camera or
    outside the image); the flag is what distinguishes usable projections.
    """
    uv, ok = project_points(camera, np.asarray(p, dtype=np.float64).reshape(1, 3))
    return float(uv[0, 0]), float(uv[0, 1]), bool(ok[0])


def project_points(camera: CameraModel, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized projection: (n, 2) pixel coordinates and (n,) validity."""
    pts = np.asarray(pts, dtype=np.float64)
    cam = pts @ camera.rotation.T + camera.translation
    z = cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = camera.fx * cam[:, 0] / z + camera.cx
        v = camera.fy * cam[:, 1] / z + camera.cy
    ok = (z > 0.0) & (u >= 0.0) & (u < camera.width) & (v >= 0.0) & (v < camera.height)
    return np.stack([u, v], axis=-1), ok


def unproject(camera: CameraModel, u: float, v: float, depth: float) -> np.ndarray:
    """Ego-frame point that projects to (u, v) at the given camera depth."""
    if depth <= 0:
        raise ValueError("depth must be positive")
    cam = np.array([
        (u - camera.cx) * depth / camera.fx,
        (v - camera.cy) * depth / camera.fy,
        depth,
    ])
    return camera.rotation.T @ (cam - camera.translation)


def bilinear_sample(fm: ImageFeatureMap, u: float, v: float) -> np.ndarray:
    """Bilinear feature lookup at feature-plane (u, v); zero outside the map."""
    return kernels.bilinear_batch(fm.data, np.array([[u, v]], dtype=np.float64))[0]


def aggregate(
    q: np.ndarray,
    refs: ReferencePointSet,
    cameras: Sequence[CameraModel],
    features: Sequence[ImageFeatureMap],
    offsets: np.ndarray,
    weights: np.ndarray,
    mask: np.ndarray,
) -> np.ndarray:
    """Masked deterministic query update.

    Masked-off cells pass through unchanged. For each masked-on cell the
    output is the weighted sum of bilinear samples taken at every reference
    point's projection (plus its per-point offset, in feature coordinates) in
    every camera whose frustum contains the point; points visible nowhere
    contribute zero. Weights are used raw: normalization across samples or
    cameras is the caller's choice.
    """
    q = np.asarray(q, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.bool_)
    offsets = np.ascontiguousarray(offsets, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    nx, ny = refs.spec.bev_shape
    n_z = refs.n_z
    if q.ndim != 3 or q.shape[:2] != (nx, ny):
        raise ValueError(f"query grid shape {q.shape} does not match grid {(nx, ny)}")
    if mask.shape != (nx, ny):
        raise ValueError("mask shape does not match grid")
    if len(cameras) != len(features):
        raise ValueError("need one feature map per camera")
    if not cameras:
        raise ValueError("need at least one camera")
    if weights.shape[:3] != (nx, ny, n_z) or weights.ndim != 4:
        raise ValueError(f"weights must be (nx, ny, n_z, k), got {weights.shape}")
    if offsets.shape != (*weights.shape, 2):
        raise ValueError(f"offsets must be weights shape + (2,), got {offsets.shape}")
    if not np.isfinite(weights).all():
        raise ValueError("weights must be finite")
    channels = q.shape[2]
    for fm in features:
        if fm.data.shape[2] != channels:
            raise ValueError("feature channel count must match the query grid")

    cell_ok = mask & refs.valid
    out = q.copy()
    if not cell_ok.any():
        return out
    acc = np.zeros_like(q)
    points = np.where(refs.valid[..., None, None], refs.points, 0.0)
    for camera, fm in zip(cameras, features):
        kernels.aggregate_camera(
            acc, points, cell_ok,
            camera.rotation, camera.translation,
            camera.fx, camera.fy, camera.cx, camera.cy,
            float(camera.width), float(camera.height),
            fm.data, fm.scale, offsets, weights,
        )
    out[cell_ok] = acc[cell_ok]
    return out
