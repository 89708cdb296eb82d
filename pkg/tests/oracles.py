"""Independent brute-force oracles the library is tested against.

Everything here is deliberately written the slow, obvious way (python loops,
fine-step marching, direct weight evaluation) and must stay decoupled from
the library's kernels.
"""

from __future__ import annotations

import math

import numpy as np


def brute_heightmap(xyz: np.ndarray, x_min, y_min, z_min, delta_xy, delta_z, nx, ny, nz):
    """Per-pillar max z over the pillar's points, then quantized to a voxel top.

    Returns (values, valid) with NaN at invalid cells.
    """
    x_max = x_min + nx * delta_xy
    y_max = y_min + ny * delta_xy
    z_max = z_min + nz * delta_z
    best: dict[tuple[int, int], float] = {}
    for x, y, z in np.asarray(xyz, dtype=np.float64):
        if not (x_min <= x < x_max and y_min <= y < y_max and z_min <= z < z_max):
            continue
        ix = int(math.floor((x - x_min) / delta_xy))
        iy = int(math.floor((y - y_min) / delta_xy))
        ix = min(ix, nx - 1)
        iy = min(iy, ny - 1)
        key = (ix, iy)
        if key not in best or z > best[key]:
            best[key] = z
    values = np.full((nx, ny), np.nan)
    valid = np.zeros((nx, ny), dtype=np.bool_)
    for (ix, iy), z in best.items():
        iz = min(int(math.floor((z - z_min) / delta_z)), nz - 1)
        values[ix, iy] = z_min + (iz + 1) * delta_z
        valid[ix, iy] = True
    return values, valid


def brute_confusion(pred: np.ndarray, gt: np.ndarray, free_class: int):
    """Per-class (intersection, pred count, gt count) dicts by voxel loop."""
    inter: dict[int, int] = {}
    pc: dict[int, int] = {}
    gc: dict[int, int] = {}
    for p, g in zip(pred.ravel().tolist(), gt.ravel().tolist()):
        if p != free_class:
            pc[p] = pc.get(p, 0) + 1
        if g != free_class:
            gc[g] = gc.get(g, 0) + 1
        if p == g and p != free_class:
            inter[p] = inter.get(p, 0) + 1
    return inter, pc, gc


def march_ray(labels, x_min, y_min, z_min, delta_xy, delta_z, origin, direction, free_class,
              step_scale=0.01):
    """Fine-step ray marcher: (visited voxel sequence, hit class, hit depth).

    Samples the ray every step_scale * min(delta) meters between the grid
    entry and exit points, collapsing consecutive duplicate voxels. Hit depth
    is the t of the first sample inside the hit voxel (so it overshoots the
    entry plane by at most one step). The stepping is vectorized but stays a
    plain position-quantize marcher, independent of incremental traversal.
    """
    nx, ny, nz = labels.shape
    lo = np.array([x_min, y_min, z_min])
    hi = lo + np.array([nx * delta_xy, ny * delta_xy, nz * delta_z])
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)

    t_enter, t_exit = 0.0, math.inf
    for a in range(3):
        if d[a] == 0.0:
            if not (lo[a] <= o[a] < hi[a]):
                return [], None, None
        else:
            t1 = (lo[a] - o[a]) / d[a]
            t2 = (hi[a] - o[a]) / d[a]
            if t1 > t2:
                t1, t2 = t2, t1
            t_enter = max(t_enter, t1)
            t_exit = min(t_exit, t2)
    if t_enter > t_exit:
        return [], None, None

    step = step_scale * min(delta_xy, delta_z)
    n_steps = int(math.floor((t_exit - t_enter) / step)) + 1
    ts = t_enter + step * np.arange(n_steps)
    # Pad with a sample just inside the exit face so the final voxel sliver
    # between the last regular sample and the exit is not skipped.
    ts = np.append(ts, t_enter + (t_exit - t_enter) * (1.0 - 1e-12))
    pts = o + ts[:, None] * d
    idx = np.floor((pts - lo) / np.array([delta_xy, delta_xy, delta_z])).astype(np.int64)
    inside = ((idx >= 0) & (idx < np.array([nx, ny, nz]))).all(axis=1)
    idx = idx[inside]
    ts = ts[inside]
    if idx.shape[0] == 0:
        return [], None, None

    labs = labels[idx[:, 0], idx[:, 1], idx[:, 2]]
    hit_positions = np.flatnonzero(labs != free_class)
    end = hit_positions[0] if hit_positions.size else idx.shape[0] - 1

    keep = np.ones(end + 1, dtype=bool)
    keep[1:] = (idx[1:end + 1] != idx[:end]).any(axis=1)
    seq = [tuple(row) for row in idx[:end + 1][keep]]
    if hit_positions.size:
        return seq, int(labs[end]), float(ts[end])
    return seq, None, None


def brute_bilinear(feat: np.ndarray, u: float, v: float) -> np.ndarray:
    """Direct four-corner weight evaluation with the hard zero border."""
    h, w, c = feat.shape
    if u < 0 or u > w - 1 or v < 0 or v > h - 1:
        return np.zeros(c)
    u0, v0 = int(math.floor(u)), int(math.floor(v))
    u1, v1 = min(u0 + 1, w - 1), min(v0 + 1, h - 1)
    fu, fv = u - u0, v - v0
    return (
        feat[v0, u0] * (1 - fv) * (1 - fu)
        + feat[v0, u1] * (1 - fv) * fu
        + feat[v1, u0] * fv * (1 - fu)
        + feat[v1, u1] * fv * fu
    )


def brute_voxels_in_box(spec_shape, centers_fn, center, size, yaw):
    """Voxel indices whose centers fall inside an oriented box (python loop)."""
    nx, ny, nz = spec_shape
    out = []
    c, s = math.cos(yaw), math.sin(yaw)
    for ix in range(nx):
        for iy in range(ny):
            for iz in range(nz):
                px, py, pz = centers_fn(ix, iy, iz)
                rx, ry, rz = px - center[0], py - center[1], pz - center[2]
                lx = c * rx + s * ry
                ly = -s * rx + c * ry
                if abs(lx) <= size[0] / 2 and abs(ly) <= size[1] / 2 and abs(rz) <= size[2] / 2:
                    out.append((ix, iy, iz))
    return out
