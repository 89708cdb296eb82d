"""Pure-numpy implementations of the hot kernels.

These are the fallback path selected with ``HEIGHTPROJ_BACKEND=numpy`` and the
reference the numba twins in ``_kernels_numba`` are tested against. Integer
and boolean outputs are bit-identical across backends; float accumulations may
differ in the last ulps because numpy reduces pairwise.
"""

from __future__ import annotations

import math

import numpy as np

from ._hashing import (
    hash3,
    hash3_array,
    unit_from_hash,
    unit_from_hash_array,
    unit_open_from_hash,
    unit_open_from_hash_array,
)


def point_voxel_indices(xyz, x_min, y_min, z_min, delta_xy, delta_z, nx, ny, nz):
    """Per-point voxel indices, (n, 3) int64 plus an in-box mask.

    Out-of-box rows carry garbage indices; consumers must apply the mask.
    """
    x_max = x_min + nx * delta_xy
    y_max = y_min + ny * delta_xy
    z_max = z_min + nz * delta_z
    x, y, z = xyz[:, 0], xyz[:, 1], xyz[:, 2]
    inb = (
        (x >= x_min) & (x < x_max)
        & (y >= y_min) & (y < y_max)
        & (z >= z_min) & (z < z_max)
    )
    idx = np.empty((xyz.shape[0], 3), dtype=np.int64)
    np.floor((x - x_min) / delta_xy, out=idx[:, 0], casting="unsafe")
    np.floor((y - y_min) / delta_xy, out=idx[:, 1], casting="unsafe")
    np.floor((z - z_min) / delta_z, out=idx[:, 2], casting="unsafe")
    np.clip(idx[:, 0], 0, nx - 1, out=idx[:, 0])
    np.clip(idx[:, 1], 0, ny - 1, out=idx[:, 1])
    np.clip(idx[:, 2], 0, nz - 1, out=idx[:, 2])
    return idx, inb


def occupancy_from_points(xyz, x_min, y_min, z_min, delta_xy, delta_z, nx, ny, nz):
    """Boolean (nx, ny, nz) volume, True where at least one point falls."""
    bits = np.zeros((nx, ny, nz), dtype=np.bool_)
    idx, inb = point_voxel_indices(xyz, x_min, y_min, z_min, delta_xy, delta_z, nx, ny, nz)
    sel = idx[inb]
    bits[sel[:, 0], sel[:, 1], sel[:, 2]] = True
    return bits


def collapse_top_index(bits):
    """Highest occupied z index per pillar, -1 for empty pillars. (nx, ny) int64."""
    nz = bits.shape[2]
    nonempty = bits.any(axis=2)
    top = nz - 1 - np.argmax(bits[:, :, ::-1], axis=2).astype(np.int64)
    return np.where(nonempty, top, np.int64(-1))


def replace_mask(seed, rho, nx, ny):
    """Per-cell replacement decision: hash(seed, i_x, i_y) mapped to [0,1) < rho."""
    ix = np.broadcast_to(np.arange(nx, dtype=np.uint64)[:, None], (nx, ny))
    iy = np.broadcast_to(np.arange(ny, dtype=np.uint64)[None, :], (nx, ny))
    u = unit_from_hash_array(hash3_array(seed, ix, iy))
    return u < rho


def ray_randoms(seed, n):
    """Per-ray (dropout uniform, standard normal) pairs, order-independent."""
    rid = np.arange(n, dtype=np.uint64)
    u_drop = unit_from_hash_array(hash3_array(seed, rid, np.uint64(0)))
    u1 = unit_open_from_hash_array(hash3_array(seed, rid, np.uint64(1)))
    u2 = unit_from_hash_array(hash3_array(seed, rid, np.uint64(2)))
    normal = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
    return u_drop, normal


def raycast_rays(origin, dirs, has_ground, ground_z, centers, half_sizes, cos_yaw, sin_yaw, max_range):
    """First-hit parameter t and hit id for each ray from a shared origin.

    Hit id: -1 miss, b in [0, n_boxes) for box b, n_boxes for the ground plane.
    Ground is tested first; a box must be strictly nearer to displace a hit.
    """
    n = dirs.shape[0]
    n_boxes = centers.shape[0]
    best_t = np.full(n, np.inf)
    best_id = np.full(n, -1, dtype=np.int64)

    ox, oy, oz = float(origin[0]), float(origin[1]), float(origin[2])
    if has_ground:
        dz = dirs[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (ground_z - oz) / dz
        ok = (dz != 0.0) & (t > 0.0) & (t <= max_range)
        best_t = np.where(ok, t, best_t)
        best_id = np.where(ok, np.int64(n_boxes), best_id)

    o = np.asarray([ox, oy, oz])
    for b in range(n_boxes):
        c, s = cos_yaw[b], sin_yaw[b]
        rel = o - centers[b]
        # rotate by -yaw into the box frame
        lo_x = c * rel[0] + s * rel[1]
        lo_y = -s * rel[0] + c * rel[1]
        lo_z = rel[2]
        ld = np.empty_like(dirs)
        ld[:, 0] = c * dirs[:, 0] + s * dirs[:, 1]
        ld[:, 1] = -s * dirs[:, 0] + c * dirs[:, 1]
        ld[:, 2] = dirs[:, 2]
        lo = np.array([lo_x, lo_y, lo_z])

        t_enter = np.full(n, -np.inf)
        t_exit = np.full(n, np.inf)
        inside_ok = np.ones(n, dtype=np.bool_)
        for a in range(3):
            h = half_sizes[b, a]
            da = ld[:, a]
            zero = da == 0.0
            with np.errstate(divide="ignore", invalid="ignore"):
                t1 = (-h - lo[a]) / da
                t2 = (h - lo[a]) / da
            tlo = np.minimum(t1, t2)
            thi = np.maximum(t1, t2)
            t_enter = np.where(zero, t_enter, np.maximum(t_enter, tlo))
            t_exit = np.where(zero, t_exit, np.minimum(t_exit, thi))
            inside_ok &= ~zero | (np.abs(lo[a]) <= h)
        hit = inside_ok & (t_enter <= t_exit) & (t_enter > 0.0) & (t_enter <= max_range)
        better = hit & (t_enter < best_t)
        best_t = np.where(better, t_enter, best_t)
        best_id = np.where(better, np.int64(b), best_id)

    return best_t, best_id


def ray_first_hit_batch(labels, x_min, y_min, z_min, delta_xy, delta_z, origins, dirs, free_class):
    """First non-free voxel along each ray: (class, entry depth), class -1 on miss."""
    n = origins.shape[0]
    cls = np.full(n, -1, dtype=np.int64)
    depth = np.full(n, np.nan)
    for i in range(n):
        c, d = _dda_first_hit(
            labels, x_min, y_min, z_min, delta_xy, delta_z,
            float(origins[i, 0]), float(origins[i, 1]), float(origins[i, 2]),
            float(dirs[i, 0]), float(dirs[i, 1]), float(dirs[i, 2]),
            free_class,
        )
        cls[i] = c
        depth[i] = d
    return cls, depth


def _dda_setup(dims, lo, deltas, o, d):
    """Grid entry test plus Amanatides-Woo walk state, or None on a clean miss."""
    hi = (lo[0] + dims[0] * deltas[0], lo[1] + dims[1] * deltas[1], lo[2] + dims[2] * deltas[2])
    t_enter = 0.0
    t_exit = math.inf
    for a in range(3):
        if d[a] == 0.0:
            if not (lo[a] <= o[a] < hi[a]):
                return None
        else:
            t1 = (lo[a] - o[a]) / d[a]
            t2 = (hi[a] - o[a]) / d[a]
            if t1 > t2:
                t1, t2 = t2, t1
            if t1 > t_enter:
                t_enter = t1
            if t2 < t_exit:
                t_exit = t2
    if t_enter > t_exit:
        return None
    idx = [0, 0, 0]
    step = [0, 0, 0]
    t_max = [math.inf, math.inf, math.inf]
    t_delta = [math.inf, math.inf, math.inf]
    for a in range(3):
        p = o[a] + t_enter * d[a]
        j = int(math.floor((p - lo[a]) / deltas[a]))
        idx[a] = min(max(j, 0), dims[a] - 1)
        if d[a] > 0.0:
            step[a] = 1
            t_max[a] = ((idx[a] + 1) * deltas[a] + lo[a] - o[a]) / d[a]
            t_delta[a] = deltas[a] / d[a]
        elif d[a] < 0.0:
            step[a] = -1
            t_max[a] = (idx[a] * deltas[a] + lo[a] - o[a]) / d[a]
            t_delta[a] = -deltas[a] / d[a]
    return idx, step, t_max, t_delta, t_enter


def _dda_first_hit(labels, x_min, y_min, z_min, delta_xy, delta_z, ox, oy, oz, dx, dy, dz, free_class):
    dims = labels.shape
    state = _dda_setup(dims, (x_min, y_min, z_min), (delta_xy, delta_xy, delta_z),
                       (ox, oy, oz), (dx, dy, dz))
    if state is None:
        return -1, math.nan
    idx, step, t_max, t_delta, t_entry = state
    for _ in range(dims[0] + dims[1] + dims[2] + 3):
        lab = labels[idx[0], idx[1], idx[2]]
        if lab != free_class:
            return int(lab), t_entry
        if t_max[0] <= t_max[1] and t_max[0] <= t_max[2]:
            a = 0
        elif t_max[1] <= t_max[2]:
            a = 1
        else:
            a = 2
        t_entry = t_max[a]
        idx[a] += step[a]
        if idx[a] < 0 or idx[a] >= dims[a]:
            return -1, math.nan
        t_max[a] += t_delta[a]
    return -1, math.nan


def ray_voxels(dims, x_min, y_min, z_min, delta_xy, delta_z, ox, oy, oz, dx, dy, dz):
    """Visitation order of voxels along one ray, (m, 3) int64. Diagnostic."""
    state = _dda_setup(tuple(dims), (x_min, y_min, z_min), (delta_xy, delta_xy, delta_z),
                       (ox, oy, oz), (dx, dy, dz))
    if state is None:
        return np.zeros((0, 3), dtype=np.int64)
    idx, step, t_max, t_delta, _ = state
    visited = []
    for _ in range(dims[0] + dims[1] + dims[2] + 3):
        visited.append((idx[0], idx[1], idx[2]))
        if t_max[0] <= t_max[1] and t_max[0] <= t_max[2]:
            a = 0
        elif t_max[1] <= t_max[2]:
            a = 1
        else:
            a = 2
        idx[a] += step[a]
        if idx[a] < 0 or idx[a] >= dims[a]:
            break
        t_max[a] += t_delta[a]
    return np.asarray(visited, dtype=np.int64).reshape(-1, 3)


def bilinear_batch(feat, uv):
    """Bilinear samples from (h, w, c) at (n, 2) coordinates; zero outside [0,w-1]x[0,h-1]."""
    h, w, c = feat.shape
    u = uv[:, 0]
    v = uv[:, 1]
    ok = (u >= 0.0) & (u <= w - 1.0) & (v >= 0.0) & (v <= h - 1.0)
    u = np.where(ok, u, 0.0)
    v = np.where(ok, v, 0.0)
    u0 = np.floor(u).astype(np.int64)
    v0 = np.floor(v).astype(np.int64)
    u1 = np.minimum(u0 + 1, w - 1)
    v1 = np.minimum(v0 + 1, h - 1)
    fu = u - u0
    fv = v - v0
    out = (
        feat[v0, u0] * ((1.0 - fv) * (1.0 - fu))[:, None]
        + feat[v0, u1] * ((1.0 - fv) * fu)[:, None]
        + feat[v1, u0] * (fv * (1.0 - fu))[:, None]
        + feat[v1, u1] * (fv * fu)[:, None]
    )
    out[~ok] = 0.0
    return out


def aggregate_camera(acc, points, cell_ok, rot, trans, fx, fy, cx, cy, width, height,
                     feat, scale, offsets, weights):
    """Accumulate one camera's weighted bilinear samples into acc (nx, ny, c).

    points: (nx, ny, j, 3) ego-frame reference points; cells with cell_ok False
    are skipped. offsets/weights: (nx, ny, j, k, 2) and (nx, ny, j, k) in
    feature-plane units.
    """
    sel = np.nonzero(cell_ok)
    if sel[0].size == 0:
        return
    pts = points[sel]                      # (m, j, 3)
    off = offsets[sel]                     # (m, j, k, 2)
    wts = weights[sel]                     # (m, j, k)
    m, j, k = wts.shape

    cam = pts.reshape(-1, 3) @ rot.T + trans
    z = cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = fx * cam[:, 0] / z + cx
        v = fy * cam[:, 1] / z + cy
    infrustum = (z > 0.0) & (u >= 0.0) & (u < width) & (v >= 0.0) & (v < height)
    u = np.where(infrustum, u, 0.0)
    v = np.where(infrustum, v, 0.0)

    base = np.stack([u, v], axis=-1).reshape(m, j, 1, 2) * scale
    coords = (base + off).reshape(-1, 2)
    samples = bilinear_batch(feat, coords).reshape(m, j, k, -1)
    samples *= infrustum.reshape(m, j, 1, 1)
    contrib = (samples * wts[..., None]).sum(axis=(1, 2))
    acc[sel] += contrib
