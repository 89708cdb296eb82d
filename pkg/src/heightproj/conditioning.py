"""Training-time conditioning of the LiDAR height map.

During training the noisy measured map can be blended with a clean reference
map, with a mixing ratio annealed over epochs; at inference the measured map
passes through unchanged. Replace-mode draws are a pure function of
(seed, i_x, i_y), so results are reproducible for any evaluation order or
thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .heightmap import HeightMap

SCHEDULE_KINDS = ("cosine", "step")
MIX_MODES = ("replace", "lerp")


@dataclass(frozen=True)
class ScheduleParams:
    total_epochs: int
    kind: str = "cosine"
    step_fraction: float = 0.5

    def __post_init__(self):
        if self.total_epochs < 1:
            raise ValueError("total_epochs must be >= 1")
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"schedule kind must be one of {SCHEDULE_KINDS}")
        if not 0.0 < self.step_fraction < 1.0:
            raise ValueError("step_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class MixConfig:
    mode: str = "replace"
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MIX_MODES:
            raise ValueError(f"mix mode must be one of {MIX_MODES}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def schedule_rho(e: int, params: ScheduleParams) -> float:
    """Mixing ratio at epoch e: cosine anneal from 1 to 0, or a hard step."""
    if not 0 <= e <= params.total_epochs:
        raise ValueError(f"epoch {e} outside [0, {params.total_epochs}]")
    if params.kind == "cosine":
        return 0.5 * (1.0 + math.cos(math.pi * e / params.total_epochs))
    return 1.0 if e < params.step_fraction * params.total_epochs else 0.0


def mix(h_lidar: HeightMap, h_gt: HeightMap, rho: float, cfg: MixConfig) -> HeightMap:
    """Blend two aligned height maps.

    replace: each cell valid in both takes the reference value with
    probability rho (hash of (seed, i_x, i_y)); lerp: convex combination with
    weight rho. Cells valid only in h_lidar keep their value; the output
    validity mask always equals h_lidar's.
    """
    if h_lidar.spec != h_gt.spec:
        raise ValueError("height maps use different grid specs")
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    both = h_lidar.valid & h_gt.valid
    values = h_lidar.values.copy()
    if cfg.mode == "replace":
        take_gt = kernels.replace_mask(cfg.seed, rho, h_lidar.spec.nx, h_lidar.spec.ny) & both
        values[take_gt] = h_gt.values[take_gt]
    else:
        values[both] = rho * h_gt.values[both] + (1.0 - rho) * h_lidar.values[both]
    return HeightMap(h_lidar.spec, values, h_lidar.valid.copy())


def condition_for_inference(h_lidar: HeightMap) -> HeightMap:
    """Inference path: the measured map is used as-is."""
    return HeightMap(h_lidar.spec, h_lidar.values.copy(), h_lidar.valid.copy())
