"""Geometry kernels for height-guided BEV projection.

LiDAR-to-BEV height maps, scheduled height-map conditioning, height-guided
vertical sampling with validity masking, pinhole projection with a
deterministic masked aggregation kernel, occupancy metrics, and a synthetic
scene simulator.
"""

from .conditioning import MixConfig, ScheduleParams, condition_for_inference, mix, schedule_rho
from .grid import PointCloud, VoxelGridSpec, VoxelIndex, voxel_center, voxel_index
from .heightmap import (
    BinaryOccupancyGrid,
    HeightMap,
    SemanticVoxelGrid,
    build_occupancy,
    collapse_height,
    heightmap_from_points,
    heightmap_from_semantic,
)
from .kernels import BACKEND, set_threads
from .metrics import (
    ConfusionCounts,
    RayIoUResult,
    RayQuery,
    confusion,
    miou,
    ray_fan,
    ray_first_hit,
    ray_voxel_sequence,
    rayiou,
)
from .projection import (
    CameraModel,
    ImageFeatureMap,
    ReferencePointSet,
    SamplingConfig,
    aggregate,
    bilinear_sample,
    project,
    project_points,
    sample_height_guided,
    sample_uniform,
    uniform_reference_points,
    unproject,
    validity_mask,
)
from .simulator import (
    BoxSpec,
    GroundSpec,
    HeightErrorStats,
    HitRateResult,
    LidarSpec,
    SceneSpec,
    height_error_stats,
    hitrate_experiment,
    rasterize_gt,
    raycast_scene,
    simulate_lidar,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BinaryOccupancyGrid",
    "BoxSpec",
    "CameraModel",
    "ConfusionCounts",
    "GroundSpec",
    "HeightErrorStats",
    "HeightMap",
    "HitRateResult",
    "ImageFeatureMap",
    "LidarSpec",
    "MixConfig",
    "PointCloud",
    "RayIoUResult",
    "RayQuery",
    "ReferencePointSet",
    "SamplingConfig",
    "SceneSpec",
    "ScheduleParams",
    "SemanticVoxelGrid",
    "VoxelGridSpec",
    "VoxelIndex",
    "aggregate",
    "bilinear_sample",
    "build_occupancy",
    "collapse_height",
    "condition_for_inference",
    "confusion",
    "height_error_stats",
    "heightmap_from_points",
    "heightmap_from_semantic",
    "hitrate_experiment",
    "miou",
    "mix",
    "project",
    "project_points",
    "rasterize_gt",
    "ray_fan",
    "ray_first_hit",
    "ray_voxel_sequence",
    "raycast_scene",
    "rayiou",
    "sample_height_guided",
    "sample_uniform",
    "schedule_rho",
    "set_threads",
    "simulate_lidar",
    "uniform_reference_points",
    "unproject",
    "validity_mask",
    "voxel_center",
    "voxel_index",
]
