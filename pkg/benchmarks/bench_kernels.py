#!/usr/bin/env python3
"""Time the numba kernels against the pure-numpy fallback.

Run from the repo root:

    python3 benchmarks/bench_kernels.py [--reps 5] [--scale 1.0]

Both backends are imported directly, so the HEIGHTPROJ_BACKEND flag has no
effect here. The first numba call per kernel compiles; compilation happens
during warmup and is excluded from the timings.
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from heightproj import _kernels_numpy as knp

try:
    from heightproj import _kernels_numba as knb
except ImportError:
    knb = None


def _time(fn, reps):
    fn()  # warmup (numba compiles here)
    best = math.inf
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _workloads(scale):
    rng = np.random.default_rng(0)
    n_pts = int(2_000_000 * scale)
    nx = ny = max(32, int(256 * math.sqrt(scale)))
    nz = 16
    xyz = rng.uniform([-40, -40, -1], [40, 40, 5.4], (n_pts, 3))
    geom = (-40.0, -40.0, -1.0, 80.0 / nx, 6.4 / nz, nx, ny, nz)

    bits = knp.occupancy_from_points(xyz, *geom)

    n_rays = int(20_000 * scale)
    dirs = rng.normal(size=(max(n_rays, 1), 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    origins = np.zeros_like(dirs)
    labels = np.where(rng.random((nx, ny, nz)) < 0.002, 3, 255).astype(np.uint8)

    n_boxes = 12
    centers = rng.uniform(-30, 30, (n_boxes, 3))
    half = rng.uniform(0.5, 3.0, (n_boxes, 3))
    yaw = rng.uniform(0, 2 * math.pi, n_boxes)

    aj, ak, ac = 4, 2, 32
    an = max(64, int(160 * math.sqrt(scale)))
    points = rng.uniform(-20, 20, (an, an, aj, 3))
    points[..., 2] = rng.uniform(-1, 5.4, (an, an, aj))
    cell_ok = rng.random((an, an)) < 0.7
    feat = rng.normal(size=(64, 96, ac))
    offsets = rng.normal(scale=1.5, size=(an, an, aj, ak, 2))
    weights = rng.random((an, an, aj, ak))
    rot = np.array([[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]])
    trans = np.array([0.0, 1.0, 25.0])

    cases = []
    cases.append((
        f"occupancy_from_points ({n_pts} pts, {nx}x{ny}x{nz})",
        lambda k: k.occupancy_from_points(xyz, *geom),
    ))
    cases.append((
        f"collapse_top_index ({nx}x{ny}x{nz})",
        lambda k: k.collapse_top_index(bits),
    ))
    cases.append((
        f"replace_mask ({nx}x{ny})",
        lambda k: k.replace_mask(42, 0.5, nx, ny),
    ))
    cases.append((
        f"ray_randoms ({n_rays})",
        lambda k: k.ray_randoms(42, n_rays),
    ))
    cases.append((
        f"raycast_rays ({n_rays} rays x {n_boxes} boxes)",
        lambda k: k.raycast_rays(np.zeros(3), dirs, True, -1.0, centers, half,
                                 np.cos(yaw), np.sin(yaw), 100.0),
    ))
    cases.append((
        f"ray_first_hit_batch ({n_rays} rays)",
        lambda k: k.ray_first_hit_batch(labels, -40.0, -40.0, -1.0,
                                        80.0 / nx, 6.4 / nz, origins, dirs, 255),
    ))
    cases.append((
        f"aggregate_camera ({an}x{an}, j={aj}, k={ak}, c={ac})",
        lambda k: k.aggregate_camera(np.zeros((an, an, ac)), points, cell_ok, rot, trans,
                                     500.0, 500.0, 48.0, 32.0, 96.0, 64.0,
                                     feat, 1.0, offsets, weights),
    ))
    return cases


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--reps", type=int, default=5)
    parser.add_argument("--scale", type=float, default=1.0,
                        help="shrink (<1) or grow (>1) every workload")
    args = parser.parse_args()

    print(f"{'kernel':<52} {'numpy':>10} {'numba':>10} {'speedup':>9}")
    for name, call in _workloads(args.scale):
        t_np = _time(lambda: call(knp), args.reps)
        if knb is None:
            print(f"{name:<52} {t_np * 1e3:>8.2f}ms {'n/a':>10} {'n/a':>9}")
            continue
        t_nb = _time(lambda: call(knb), args.reps)
        print(f"{name:<52} {t_np * 1e3:>8.2f}ms {t_nb * 1e3:>8.2f}ms {t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
