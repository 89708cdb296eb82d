#!/usr/bin/env python3
"""Regenerate the committed CLI fixtures.

The golden height map is produced by the brute-force oracle and raw struct
packing only, independent of the package's writers, so the CLI golden test
cross-checks the whole pipeline including the file format.
"""

from __future__ import annotations

import json
import pathlib
import struct
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1]))
from oracles import brute_heightmap  # noqa: E402

HERE = pathlib.Path(__file__).resolve().parent

SPEC = dict(x_min=-8.0, x_max=8.0, y_min=-8.0, y_max=8.0, z_min=-1.0, z_max=5.4,
            delta_xy=0.4, delta_z=0.4)
NX, NY, NZ = 40, 40, 16
QNAN = 0x7FC00000


def main():
    rng = np.random.default_rng(20260810)
    pts = rng.uniform([-9.0, -9.0, -1.5], [9.0, 9.0, 6.0], (1000, 3))
    # The on-disk format is f32; quantize first so the oracle sees exactly
    # what the CLI will read back.
    pts = pts.astype("<f4")

    with open(HERE / "fixture_spec.json", "w", encoding="utf-8", newline="\n") as f:
        json.dump(SPEC, f, sort_keys=True)
        f.write("\n")

    with open(HERE / "fixture.hprp", "wb") as f:
        f.write(b"HPRP")
        f.write(struct.pack("<I", 1))
        f.write(struct.pack("<Q", pts.shape[0]))
        f.write(pts.tobytes())

    values, valid = brute_heightmap(
        pts.astype(np.float64),
        SPEC["x_min"], SPEC["y_min"], SPEC["z_min"],
        SPEC["delta_xy"], SPEC["delta_z"], NX, NY, NZ,
    )
    payload = values.astype("<f4").view(np.uint32).copy()
    payload[~valid] = np.uint32(QNAN)
    with open(HERE / "fixture_golden.hprh", "wb") as f:
        f.write(b"HPRH")
        f.write(struct.pack("<I", 1))
        f.write(struct.pack("<II", NX, NY))
        f.write(payload.tobytes())

    print(f"wrote fixture.hprp ({pts.shape[0]} points), fixture_golden.hprh "
          f"({int(valid.sum())} valid cells), fixture_spec.json")


if __name__ == "__main__":
    main()
