"""Numba @njit twins of the hot kernels in ``_kernels_numpy``.

Selected by default when numba imports (override with
``HEIGHTPROJ_BACKEND=numpy``). Function names and signatures mirror the numpy
module one for one. Per-cell and per-ray outputs are written to disjoint
slots, so parallel loops are bit-deterministic for any thread count.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from numba import njit, prange
from numba.core.errors import NumbaWarning

# Old TBB builds make numba emit a threading-layer notice at first parallel
# compile; it is harmless (numba falls back to another layer) and would
# otherwise land on stderr of every CLI run.
warnings.filterwarnings("ignore", message="The TBB threading layer requires", category=NumbaWarning)

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / float(1 << 53)


@njit(cache=True, inline="always")
def _mix64(x):
    x = (x ^ (x >> np.uint64(30))) * _MIX1
    x = (x ^ (x >> np.uint64(27))) * _MIX2
    return x ^ (x >> np.uint64(31))


@njit(cache=True, inline="always")
def _hash3(seed, a, b):
    h = _mix64(seed ^ _GOLDEN)
    h = _mix64(h ^ a)
    return _mix64(h ^ b)


@njit(cache=True, inline="always")
def _unit(h):
    return (h >> np.uint64(11)) * _INV53


@njit(cache=True, inline="always")
def _unit_open(h):
    return ((h >> np.uint64(11)) + np.uint64(1)) * _INV53


@njit(cache=True)
def point_voxel_indices(xyz, x_min, y_min, z_min, delta_xy, delta_z, nx, ny, nz):
    n = xyz.shape[0]
    idx = np.empty((n, 3), dtype=np.int64)
    inb = np.empty(n, dtype=np.bool_)
    x_max = x_min + nx * delta_xy
    y_max = y_min + ny * delta_xy
    z_max = z_min + nz * delta_z
    for i in range(n):
        x = xyz[i, 0]
        y = xyz[i, 1]
        z = xyz[i, 2]
        ok = (x_min <= x < x_max) and (y_min <= y < y_max) and (z_min <= z < z_max)
        inb[i] = ok
        ix = int(math.floor((x - x_min) / delta_xy))
        iy = int(math.floor((y - y_min) / delta_xy))
        iz = int(math.floor((z - z_min) / delta_z))
        if ix < 0:
            ix = 0
        elif ix > nx - 1:
            ix = nx - 1
        if iy < 0:
            iy = 0
        elif iy > ny - 1:
            iy = ny - 1
        if iz < 0:
            iz = 0
        elif iz > nz - 1:
            iz = nz - 1
        idx[i, 0] = ix
        idx[i, 1] = iy
        idx[i, 2] = iz
    return idx, inb


@njit(cache=True)
def occupancy_from_points(xyz, x_min, y_min, z_min, delta_xy, delta_z, nx, ny, nz):
    bits = np.zeros((nx, ny, nz), dtype=np.bool_)
    idx, inb = point_voxel_indices(xyz, x_min, y_min, z_min, delta_xy, delta_z, nx, ny, nz)
    for i in range(xyz.shape[0]):
        if inb[i]:
            bits[idx[i, 0], idx[i, 1], idx[i, 2]] = True
    return bits


@njit(cache=True, parallel=True)
def collapse_top_index(bits):
    nx, ny, nz = bits.shape
    top = np.full((nx, ny), -1, dtype=np.int64)
    for ix in prange(nx):
        for iy in range(ny):
            for iz in range(nz - 1, -1, -1):
                if bits[ix, iy, iz]:
                    top[ix, iy] = iz
                    break
    return top


@njit(cache=True, parallel=True)
def replace_mask(seed, rho, nx, ny):
    out = np.empty((nx, ny), dtype=np.bool_)
    s = np.uint64(seed)
    for ix in prange(nx):
        for iy in range(ny):
            u = _unit(_hash3(s, np.uint64(ix), np.uint64(iy)))
            out[ix, iy] = u < rho
    return out


@njit(cache=True, parallel=True)
def ray_randoms(seed, n):
    u_drop = np.empty(n, dtype=np.float64)
    normal = np.empty(n, dtype=np.float64)
    s = np.uint64(seed)
    for i in prange(n):
        rid = np.uint64(i)
        u_drop[i] = _unit(_hash3(s, rid, np.uint64(0)))
        u1 = _unit_open(_hash3(s, rid, np.uint64(1)))
        u2 = _unit(_hash3(s, rid, np.uint64(2)))
        normal[i] = math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
    return u_drop, normal


@njit(cache=True, parallel=True)
def raycast_rays(origin, dirs, has_ground, ground_z, centers, half_sizes, cos_yaw, sin_yaw, max_range):
    n = dirs.shape[0]
    n_boxes = centers.shape[0]
    best_t = np.full(n, np.inf)
    best_id = np.full(n, -1, dtype=np.int64)
    ox, oy, oz = origin[0], origin[1], origin[2]
    for i in prange(n):
        dx, dy, dz = dirs[i, 0], dirs[i, 1], dirs[i, 2]
        bt = np.inf
        bid = -1
        if has_ground and dz != 0.0:
            t = (ground_z - oz) / dz
            if 0.0 < t <= max_range:
                bt = t
                bid = n_boxes
        for b in range(n_boxes):
            c = cos_yaw[b]
            s = sin_yaw[b]
            rx = ox - centers[b, 0]
            ry = oy - centers[b, 1]
            rz = oz - centers[b, 2]
            lox = c * rx + s * ry
            loy = -s * rx + c * ry
            loz = rz
            ldx = c * dx + s * dy
            ldy = -s * dx + c * dy
            ldz = dz
            t_enter = -np.inf
            t_exit = np.inf
            ok = True
            for a in range(3):
                if a == 0:
                    la, da, h = lox, ldx, half_sizes[b, 0]
                elif a == 1:
                    la, da, h = loy, ldy, half_sizes[b, 1]
                else:
                    la, da, h = loz, ldz, half_sizes[b, 2]
                if da == 0.0:
                    if abs(la) > h:
                        ok = False
                        break
                else:
                    t1 = (-h - la) / da
                    t2 = (h - la) / da
                    if t1 > t2:
                        t1, t2 = t2, t1
                    if t1 > t_enter:
                        t_enter = t1
                    if t2 < t_exit:
                        t_exit = t2
            if ok and t_enter <= t_exit and 0.0 < t_enter <= max_range and t_enter < bt:
                bt = t_enter
                bid = b
        best_t[i] = bt
        best_id[i] = bid
    return best_t, best_id


@njit(cache=True)
def _dda_first_hit(labels, x_min, y_min, z_min, delta_xy, delta_z, ox, oy, oz, dx, dy, dz, free_class):
    nx, ny, nz = labels.shape
    lo0, lo1, lo2 = x_min, y_min, z_min
    hi0 = x_min + nx * delta_xy
    hi1 = y_min + ny * delta_xy
    hi2 = z_min + nz * delta_z

    t_enter = 0.0
    t_exit = np.inf
    for a in range(3):
        if a == 0:
            o, d, lo, hi = ox, dx, lo0, hi0
        elif a == 1:
            o, d, lo, hi = oy, dy, lo1, hi1
        else:
            o, d, lo, hi = oz, dz, lo2, hi2
        if d == 0.0:
            if not (lo <= o < hi):
                return -1, np.nan
        else:
            t1 = (lo - o) / d
            t2 = (hi - o) / d
            if t1 > t2:
                t1, t2 = t2, t1
            if t1 > t_enter:
                t_enter = t1
            if t2 < t_exit:
                t_exit = t2
    if t_enter > t_exit:
        return -1, np.nan

    idx = np.empty(3, dtype=np.int64)
    step = np.zeros(3, dtype=np.int64)
    t_max = np.full(3, np.inf)
    t_delta = np.full(3, np.inf)
    for a in range(3):
        if a == 0:
            o, d, lo, delta, dim = ox, dx, lo0, delta_xy, nx
        elif a == 1:
            o, d, lo, delta, dim = oy, dy, lo1, delta_xy, ny
        else:
            o, d, lo, delta, dim = oz, dz, lo2, delta_z, nz
        p = o + t_enter * d
        j = int(math.floor((p - lo) / delta))
        if j < 0:
            j = 0
        elif j > dim - 1:
            j = dim - 1
        idx[a] = j
        if d > 0.0:
            step[a] = 1
            t_max[a] = ((j + 1) * delta + lo - o) / d
            t_delta[a] = delta / d
        elif d < 0.0:
            step[a] = -1
            t_max[a] = (j * delta + lo - o) / d
            t_delta[a] = -delta / d

    t_entry = t_enter
    for _ in range(nx + ny + nz + 3):
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
        if idx[a] < 0 or idx[a] >= labels.shape[a]:
            return -1, np.nan
        t_max[a] += t_delta[a]
    return -1, np.nan


@njit(cache=True, parallel=True)
def ray_first_hit_batch(labels, x_min, y_min, z_min, delta_xy, delta_z, origins, dirs, free_class):
    n = origins.shape[0]
    cls = np.full(n, -1, dtype=np.int64)
    depth = np.full(n, np.nan)
    for i in prange(n):
        c, d = _dda_first_hit(
            labels, x_min, y_min, z_min, delta_xy, delta_z,
            origins[i, 0], origins[i, 1], origins[i, 2],
            dirs[i, 0], dirs[i, 1], dirs[i, 2], free_class,
        )
        cls[i] = c
        depth[i] = d
    return cls, depth


@njit(cache=True, inline="always")
def _bilinear_one(feat, u, v, out, w):
    h, wd = feat.shape[0], feat.shape[1]
    if u < 0.0 or u > wd - 1.0 or v < 0.0 or v > h - 1.0:
        return
    u0 = int(math.floor(u))
    v0 = int(math.floor(v))
    u1 = u0 + 1
    v1 = v0 + 1
    if u1 > wd - 1:
        u1 = wd - 1
    if v1 > h - 1:
        v1 = h - 1
    fu = u - u0
    fv = v - v0
    w00 = (1.0 - fv) * (1.0 - fu) * w
    w01 = (1.0 - fv) * fu * w
    w10 = fv * (1.0 - fu) * w
    w11 = fv * fu * w
    for c in range(feat.shape[2]):
        out[c] += (
            w00 * feat[v0, u0, c]
            + w01 * feat[v0, u1, c]
            + w10 * feat[v1, u0, c]
            + w11 * feat[v1, u1, c]
        )


@njit(cache=True)
def bilinear_batch(feat, uv):
    n = uv.shape[0]
    out = np.zeros((n, feat.shape[2]), dtype=np.float64)
    for i in range(n):
        _bilinear_one(feat, uv[i, 0], uv[i, 1], out[i], 1.0)
    return out


@njit(cache=True, parallel=True)
def aggregate_camera(acc, points, cell_ok, rot, trans, fx, fy, cx, cy, width, height,
                     feat, scale, offsets, weights):
    nx, ny = cell_ok.shape
    nj = points.shape[2]
    nk = weights.shape[3]
    for flat in prange(nx * ny):
        ix = flat // ny
        iy = flat % ny
        if not cell_ok[ix, iy]:
            continue
        for j in range(nj):
            px = points[ix, iy, j, 0]
            py = points[ix, iy, j, 1]
            pz = points[ix, iy, j, 2]
            camx = rot[0, 0] * px + rot[0, 1] * py + rot[0, 2] * pz + trans[0]
            camy = rot[1, 0] * px + rot[1, 1] * py + rot[1, 2] * pz + trans[1]
            camz = rot[2, 0] * px + rot[2, 1] * py + rot[2, 2] * pz + trans[2]
            if camz <= 0.0:
                continue
            u = fx * camx / camz + cx
            v = fy * camy / camz + cy
            if u < 0.0 or u >= width or v < 0.0 or v >= height:
                continue
            uf = u * scale
            vf = v * scale
            for k in range(nk):
                _bilinear_one(
                    feat,
                    uf + offsets[ix, iy, j, k, 0],
                    vf + offsets[ix, iy, j, k, 1],
                    acc[ix, iy],
                    weights[ix, iy, j, k],
                )
