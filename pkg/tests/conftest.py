import math

import numpy as np
import pytest

from heightproj import (
    BoxSpec,
    CameraModel,
    GroundSpec,
    LidarSpec,
    SceneSpec,
    VoxelGridSpec,
)

# Side-looking camera 10 m behind the canonical box, 1 m up: ego +x maps to
# the optical axis.
_SIDE_ROT = np.array([[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]])


@pytest.fixture(scope="session")
def occ3d_spec():
    return VoxelGridSpec(-40.0, 40.0, -40.0, 40.0, -1.0, 5.4, 0.4, 0.4)


@pytest.fixture(scope="session")
def small_spec():
    return VoxelGridSpec(0.0, 2.0, 0.0, 1.5, 0.0, 1.0, 0.5, 0.25)


@pytest.fixture(scope="session")
def canonical_scene():
    """One box whose top sits at 1.8 m and whose base sits on the grid floor."""
    return SceneSpec(
        ground=None,
        objects=(BoxSpec(center=(2.0, 0.0, 0.4), size=(3.2, 3.2, 2.8), yaw=0.0, class_id=2),),
    )


@pytest.fixture(scope="session")
def canonical_camera():
    center = np.array([-10.0, 0.0, 1.0])
    return CameraModel(
        fx=500.0, fy=500.0, cx=400.0, cy=300.0, width=800, height=600,
        rotation=_SIDE_ROT, translation=-_SIDE_ROT @ center,
    )


@pytest.fixture(scope="session")
def canonical_lidar():
    """Downward fan from above the canonical box, covering its top face."""
    return LidarSpec(
        origin=(-6.0, 0.0, 5.0),
        azimuth_range=(-0.35, 0.35), azimuth_count=160,
        elevation_range=(-0.55, -0.22), elevation_count=60,
        max_range=60.0, noise_sigma_z=0.05, dropout_prob=0.0, seed=11,
    )


@pytest.fixture(scope="session")
def heighterr_scene():
    """Ground plane plus a box top at 1.75 m; no surface on a voxel boundary."""
    return SceneSpec(
        ground=GroundSpec(z_top=0.05, class_id=1),
        objects=(BoxSpec(center=(2.0, 0.0, 0.9), size=(3.2, 3.2, 1.7), yaw=0.0, class_id=2),),
    )


def heighterr_lidar(sigma: float, seed: int = 5) -> LidarSpec:
    return LidarSpec(
        origin=(0.0, 0.0, 4.0),
        azimuth_range=(0.0, 2.0 * math.pi), azimuth_count=180,
        elevation_range=(-1.35, -0.25), elevation_count=40,
        max_range=60.0, noise_sigma_z=sigma, dropout_prob=0.0, seed=seed,
    )
