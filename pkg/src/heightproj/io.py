"""Bit-exact file formats and the JSON/CSV side formats.

Binary layouts (all little-endian):

* ``.hprp`` points:      magic "HPRP", u32 version, u64 count, count x 3 f32
* ``.hprh`` height map:  magic "HPRH", u32 version, u32 nx, u32 ny, nx*ny f32
  (row-major over (i_x, i_y); invalid cells are quiet NaN)
* ``.hprv`` voxel labels: magic "HPRV", u32 version, u32 nx, ny, nz,
  nx*ny*nz u8 (255 = free)

Writers emit canonical bytes (one NaN pattern, fixed row order), so equal
inputs produce byte-identical files.
"""

from __future__ import annotations

import json
import struct
from typing import Optional, Sequence

import numpy as np

from .grid import PointCloud, VoxelGridSpec
from .heightmap import HeightMap, SemanticVoxelGrid
from .projection import CameraModel
from .simulator import BoxSpec, GroundSpec, LidarSpec, SceneSpec

MAGIC_POINTS = b"HPRP"
MAGIC_HEIGHT = b"HPRH"
MAGIC_VOXELS = b"HPRV"
FORMAT_VERSION = 1

FREE_LABEL = 255

# Canonical quiet-NaN bit pattern written for invalid cells.
_QNAN_BITS = np.uint32(0x7FC00000)


class FormatError(ValueError):
    """Malformed file content; ``offset`` is the failing byte position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def _read_exact(f, n: int, offset: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise FormatError(f"truncated file: expected {n} bytes for {what}", offset)
    return data


def _read_header(f, magic: bytes) -> int:
    got = _read_exact(f, 4, 0, "magic")
    if got != magic:
        raise FormatError(f"bad magic {got!r}, expected {magic!r}", 0)
    (version,) = struct.unpack("<I", _read_exact(f, 4, 4, "version"))
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported version {version}", 4)
    return 8


def write_points(path, points: PointCloud) -> None:
    data = np.ascontiguousarray(points.xyz, dtype="<f4")
    with open(path, "wb") as f:
        f.write(MAGIC_POINTS)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<Q", data.shape[0]))
        f.write(data.tobytes())


def read_points(path) -> PointCloud:
    with open(path, "rb") as f:
        offset = _read_header(f, MAGIC_POINTS)
        (count,) = struct.unpack("<Q", _read_exact(f, 8, offset, "point count"))
        offset += 8
        payload = _read_exact(f, count * 12, offset, f"{count} points")
        offset += count * 12
        if f.read(1):
            raise FormatError("trailing bytes after point payload", offset)
    xyz = np.frombuffer(payload, dtype="<f4").reshape(count, 3).astype(np.float64)
    if not np.isfinite(xyz).all():
        raise FormatError("non-finite point coordinates", 16)
    return PointCloud(xyz)


def write_heightmap(path, hm: HeightMap) -> None:
    bits = np.ascontiguousarray(hm.values, dtype="<f4").view(np.uint32).copy()
    bits[~hm.valid] = _QNAN_BITS
    with open(path, "wb") as f:
        f.write(MAGIC_HEIGHT)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<II", hm.spec.nx, hm.spec.ny))
        f.write(bits.tobytes())


def read_heightmap(path, spec: VoxelGridSpec) -> HeightMap:
    with open(path, "rb") as f:
        offset = _read_header(f, MAGIC_HEIGHT)
        nx, ny = struct.unpack("<II", _read_exact(f, 8, offset, "dimensions"))
        offset += 8
        if (nx, ny) != spec.bev_shape:
            raise ValueError(f"height map is {nx}x{ny} but the grid spec wants {spec.bev_shape}")
        payload = _read_exact(f, nx * ny * 4, offset, "height values")
        offset += nx * ny * 4
        if f.read(1):
            raise FormatError("trailing bytes after height payload", offset)
    values = np.frombuffer(payload, dtype="<f4").reshape(nx, ny).astype(np.float64)
    valid = ~np.isnan(values)
    return HeightMap(spec, values, valid)


def write_voxels(path, grid: SemanticVoxelGrid) -> None:
    labels = grid.labels
    if grid.free_class != FREE_LABEL:
        if (labels == FREE_LABEL).any():
            raise ValueError(f"label {FREE_LABEL} is reserved for the free class on disk")
        labels = labels.copy()
        labels[labels == grid.free_class] = FREE_LABEL
    with open(path, "wb") as f:
        f.write(MAGIC_VOXELS)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<III", grid.spec.nx, grid.spec.ny, grid.spec.nz))
        f.write(np.ascontiguousarray(labels).tobytes())


def read_voxels(path, spec: VoxelGridSpec, classes: Optional[Sequence[int]] = None) -> SemanticVoxelGrid:
    with open(path, "rb") as f:
        offset = _read_header(f, MAGIC_VOXELS)
        nx, ny, nz = struct.unpack("<III", _read_exact(f, 12, offset, "dimensions"))
        offset += 12
        if (nx, ny, nz) != spec.shape:
            raise ValueError(f"voxel grid is {nx}x{ny}x{nz} but the grid spec wants {spec.shape}")
        payload = _read_exact(f, nx * ny * nz, offset, "voxel labels")
        payload_offset = offset
        offset += nx * ny * nz
        if f.read(1):
            raise FormatError("trailing bytes after voxel payload", offset)
    labels = np.frombuffer(payload, dtype=np.uint8).reshape(nx, ny, nz)
    if classes is not None:
        known = np.zeros(256, dtype=np.bool_)
        known[list(classes)] = True
        known[FREE_LABEL] = True
        bad = ~known[labels]
        if bad.any():
            first = int(np.flatnonzero(bad.ravel())[0])
            raise FormatError(
                f"unknown label {int(labels.ravel()[first])} outside the declared vocabulary",
                payload_offset + first,
            )
    return SemanticVoxelGrid(spec, labels.copy(), FREE_LABEL)


def write_grid_spec(path, spec: VoxelGridSpec) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(spec.to_json())
        f.write("\n")


def read_grid_spec(path) -> VoxelGridSpec:
    with open(path, "r", encoding="utf-8") as f:
        return VoxelGridSpec.from_json(f.read())


def write_camera(path, camera: CameraModel) -> None:
    doc = {
        "fx": camera.fx, "fy": camera.fy, "cx": camera.cx, "cy": camera.cy,
        "width": camera.width, "height": camera.height,
        "rotation": [float(v) for v in camera.rotation.ravel()],
        "translation": [float(v) for v in camera.translation],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(doc, f, sort_keys=True)
        f.write("\n")


def read_camera(path) -> CameraModel:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    try:
        rotation = np.asarray(doc["rotation"], dtype=np.float64).reshape(3, 3)
        translation = np.asarray(doc["translation"], dtype=np.float64).reshape(3)
        return CameraModel(
            fx=float(doc["fx"]), fy=float(doc["fy"]),
            cx=float(doc["cx"]), cy=float(doc["cy"]),
            width=int(doc["width"]), height=int(doc["height"]),
            rotation=rotation, translation=translation,
        )
    except KeyError as e:
        raise ValueError(f"camera file is missing key {e}") from e


def write_scene(path, scene: SceneSpec) -> None:
    doc = {
        "ground": None if scene.ground is None else
            {"z_top": scene.ground.z_top, "class_id": scene.ground.class_id},
        "objects": [
            {
                "center": list(map(float, o.center)),
                "size": list(map(float, o.size)),
                "yaw": float(o.yaw),
                "class_id": o.class_id,
            }
            for o in scene.objects
        ],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(doc, f, sort_keys=True)
        f.write("\n")


def read_scene(path) -> SceneSpec:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    ground = None
    if doc.get("ground") is not None:
        ground = GroundSpec(float(doc["ground"]["z_top"]), int(doc["ground"]["class_id"]))
    objects = tuple(
        BoxSpec(
            center=tuple(map(float, o["center"])),
            size=tuple(map(float, o["size"])),
            yaw=float(o["yaw"]),
            class_id=int(o["class_id"]),
        )
        for o in doc.get("objects", [])
    )
    return SceneSpec(ground, objects)


def write_lidar_spec(path, lidar: LidarSpec) -> None:
    doc = {
        "origin": list(map(float, lidar.origin)),
        "azimuth_range": list(map(float, lidar.azimuth_range)),
        "azimuth_count": lidar.azimuth_count,
        "elevation_range": list(map(float, lidar.elevation_range)),
        "elevation_count": lidar.elevation_count,
        "max_range": lidar.max_range,
        "noise_sigma_z": lidar.noise_sigma_z,
        "dropout_prob": lidar.dropout_prob,
        "seed": lidar.seed,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(doc, f, sort_keys=True)
        f.write("\n")


def read_lidar_spec(path) -> LidarSpec:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    try:
        return LidarSpec(
            origin=tuple(map(float, doc["origin"])),
            azimuth_range=tuple(map(float, doc["azimuth_range"])),
            azimuth_count=int(doc["azimuth_count"]),
            elevation_range=tuple(map(float, doc["elevation_range"])),
            elevation_count=int(doc["elevation_count"]),
            max_range=float(doc["max_range"]),
            noise_sigma_z=float(doc.get("noise_sigma_z", 0.0)),
            dropout_prob=float(doc.get("dropout_prob", 0.0)),
            seed=int(doc.get("seed", 0)),
        )
    except KeyError as e:
        raise ValueError(f"lidar file is missing key {e}") from e


def _fmt(value) -> str:
    """Shortest round-trip decimal for floats; plain digits for ints/bools."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_csv(path, header: Sequence[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def read_reference_csv(path) -> np.ndarray:
    """Reference points as a structured array (i_x, i_y, j, z, x, y)."""
    dtype = np.dtype([
        ("i_x", np.int64), ("i_y", np.int64), ("j", np.int64),
        ("z", np.float64), ("x", np.float64), ("y", np.float64),
    ])
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip().split(",")
        expected = list(dtype.names)
        if header != expected:
            raise ValueError(f"reference CSV must have columns {expected}, got {header}")
        rows = []
        for line in f:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 6:
                raise ValueError(f"reference CSV row has {len(parts)} fields, expected 6")
            rows.append((int(parts[0]), int(parts[1]), int(parts[2]),
                         float(parts[3]), float(parts[4]) , float(parts[5])))
    out = np.zeros(len(rows), dtype=dtype)
    for i, r in enumerate(rows):
        out[i] = r
    return out


def read_rays_csv(path) -> np.ndarray:
    """Rays as (n, 6) float64 rows of ox, oy, oz, dx, dy, dz."""
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip().split(",")
        if header != ["ox", "oy", "oz", "dx", "dy", "dz"]:
            raise ValueError(f"ray CSV must have columns ox..dz, got {header}")
        rows = [tuple(float(v) for v in line.strip().split(",")) for line in f if line.strip()]
    out = np.asarray(rows, dtype=np.float64)
    if out.size == 0:
        return out.reshape(0, 6)
    if out.shape[1] != 6:
        raise ValueError("ray CSV rows must have 6 fields")
    return out
