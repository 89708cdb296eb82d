"""Command-line entry point tying the modules into reproducible pipelines.

Exit codes: 0 success, 1 usage error, 2 data/format error. Every random
decision is seeded through flags, so identical invocations write identical
bytes.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import io, kernels
from .conditioning import MixConfig, ScheduleParams, mix, schedule_rho
from .heightmap import heightmap_from_points, heightmap_from_semantic
from .metrics import RayQuery, confusion, miou, ray_fan, rayiou
from .projection import (
    SamplingConfig,
    project_points,
    sample_height_guided,
    uniform_reference_points,
)
from .simulator import height_error_stats, hitrate_experiment, rasterize_gt, simulate_lidar

PROG = "heightproj"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors; this tool reserves 2 for
    # data errors, so remap.
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog=PROG, description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=0,
                        help="cap kernel parallelism (0 = auto)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("heightmap", help="point cloud -> BEV height map")
    p.add_argument("--points", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("gtheight", help="semantic voxels -> BEV height map")
    p.add_argument("--voxels", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("mix", help="blend measured and reference height maps")
    p.add_argument("--lidar", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--epoch", type=int, required=True)
    p.add_argument("--epochs", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=["replace", "lerp"], default="replace")
    p.add_argument("--schedule", choices=["cosine", "step"], default="cosine")
    p.add_argument("--step-fraction", type=float, default=0.5)
    p.add_argument("--out", required=True)

    p = sub.add_parser("sample", help="vertical sampling locations -> CSV")
    p.add_argument("--spec", required=True)
    p.add_argument("--nz", type=int, default=4)
    p.add_argument("--mode", choices=["uniform", "guided"], default="uniform")
    p.add_argument("--heights", help="height map file (required for guided mode)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("project", help="reference CSV + calibration -> pixel CSV")
    p.add_argument("--refs", required=True)
    p.add_argument("--calib", action="append", required=True,
                   help="camera JSON; repeat for multiple cameras")
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="occupancy metrics between two voxel files")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--metric", choices=["miou", "rayiou"], required=True)
    p.add_argument("--rays", help="CSV of ray origins/directions (rayiou)")
    p.add_argument("--ray-origin", type=float, nargs=3, default=[0.0, 0.0, 0.0])
    p.add_argument("--ray-azimuths", type=int, default=72)
    p.add_argument("--ray-elevations", type=int, default=8)
    p.add_argument("--thresholds", type=float, nargs="+", default=[1.0, 2.0, 4.0])
    p.add_argument("--json", dest="json_out", help="also write the JSON report here")

    p = sub.add_parser("sim", help="scene + lidar -> point cloud and voxel ground truth")
    p.add_argument("--scene", required=True)
    p.add_argument("--lidar", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--out-points", required=True)
    p.add_argument("--out-voxels", required=True)

    p = sub.add_parser("exp-hitrate", help="projected-point hit-rate experiment")
    p.add_argument("--scene", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--nz", type=int, default=4)
    p.add_argument("--mode", choices=["uniform", "height_guided"], required=True)
    p.add_argument("--heights", help="height map for height_guided mode; "
                                     "defaults to heights extracted from the rasterized scene")
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-json", required=True)

    p = sub.add_parser("exp-heighterr", help="measured vs reference height error")
    p.add_argument("--scene", required=True)
    p.add_argument("--lidar", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--out-json", required=True)
    p.add_argument("--out-csv", help="histogram CSV")

    return parser


def _cmd_heightmap(args) -> int:
    spec = io.read_grid_spec(args.spec)
    hm = heightmap_from_points(io.read_points(args.points), spec)
    io.write_heightmap(args.out, hm)
    return 0


def _cmd_gtheight(args) -> int:
    spec = io.read_grid_spec(args.spec)
    hm = heightmap_from_semantic(io.read_voxels(args.voxels, spec))
    io.write_heightmap(args.out, hm)
    return 0


def _cmd_mix(args) -> int:
    spec = io.read_grid_spec(args.spec)
    h_lidar = io.read_heightmap(args.lidar, spec)
    h_gt = io.read_heightmap(args.gt, spec)
    params = ScheduleParams(args.epochs, args.schedule, args.step_fraction)
    rho = schedule_rho(args.epoch, params)
    out = mix(h_lidar, h_gt, rho, MixConfig(args.mode, args.seed))
    io.write_heightmap(args.out, out)
    return 0


def _cmd_sample(args) -> int:
    spec = io.read_grid_spec(args.spec)
    cfg = SamplingConfig(args.nz)
    if args.mode == "guided":
        if not args.heights:
            raise ValueError("guided mode needs --heights")
        refs = sample_height_guided(io.read_heightmap(args.heights, spec), cfg)
    else:
        refs = uniform_reference_points(spec, cfg)

    def rows():
        for ix, iy in zip(*np.nonzero(refs.valid)):
            for j in range(refs.n_z):
                p = refs.points[ix, iy, j]
                yield (ix, iy, j, p[2], p[0], p[1])

    io.write_csv(args.out, ["i_x", "i_y", "j", "z", "x", "y"], rows())
    return 0


def _cmd_project(args) -> int:
    refs = io.read_reference_csv(args.refs)
    cameras = [io.read_camera(path) for path in args.calib]
    pts = np.stack([refs["x"], refs["y"], refs["z"]], axis=-1)

    def rows():
        for cam_id, camera in enumerate(cameras):
            uv, ok = project_points(camera, pts)
            for r in range(refs.shape[0]):
                yield (refs["i_x"][r], refs["i_y"][r], refs["j"][r], refs["z"][r],
                       refs["x"][r], refs["y"][r], uv[r, 0], uv[r, 1], cam_id, ok[r])

    io.write_csv(args.out, ["i_x", "i_y", "j", "z", "x", "y", "u", "v", "cam_id", "valid"], rows())
    return 0


def _cmd_eval(args) -> int:
    spec = io.read_grid_spec(args.spec)
    pred = io.read_voxels(args.pred, spec)
    gt = io.read_voxels(args.gt, spec)
    if args.metric == "miou":
        mean, per_class = miou(confusion(pred, gt))
        print(f"{'class':>8} {'iou':>12}")
        for c in sorted(per_class):
            print(f"{c:>8} {per_class[c]:>12.6f}")
        print(f"{'mIoU':>8} {mean:>12.6f}")
        report = {"miou": mean, "per_class": {str(c): v for c, v in sorted(per_class.items())}}
    else:
        thresholds = tuple(args.thresholds)
        if args.rays:
            rows = io.read_rays_csv(args.rays)
            queries = []
            for r in rows:
                d = r[3:6]
                norm = float(np.linalg.norm(d))
                if norm == 0:
                    raise ValueError("ray direction must be non-zero")
                queries.append(RayQuery(r[0:3], d / norm, thresholds))
        else:
            queries = ray_fan(args.ray_origin, args.ray_azimuths, args.ray_elevations,
                              thresholds=thresholds)
        result = rayiou(pred, gt, queries)
        print(f"{'threshold':>10} {'rayiou':>12}")
        for tau in sorted(result.per_threshold):
            print(f"{tau:>10.2f} {result.per_threshold[tau]:>12.6f}")
        print(f"{'mean':>10} {result.mean:>12.6f}")
        report = {
            "rayiou": result.mean,
            "per_threshold": {repr(t): v for t, v in sorted(result.per_threshold.items())},
        }
    print(json.dumps(report, sort_keys=True))
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8", newline="\n") as f:
            json.dump(report, f, sort_keys=True)
            f.write("\n")
    return 0


def _cmd_sim(args) -> int:
    scene = io.read_scene(args.scene)
    lidar = io.read_lidar_spec(args.lidar)
    spec = io.read_grid_spec(args.spec)
    io.write_points(args.out_points, simulate_lidar(scene, lidar))
    io.write_voxels(args.out_voxels, rasterize_gt(scene, spec))
    return 0


def _cmd_exp_hitrate(args) -> int:
    scene = io.read_scene(args.scene)
    camera = io.read_camera(args.calib)
    spec = io.read_grid_spec(args.spec)
    cfg = SamplingConfig(args.nz)
    height_source = None
    if args.mode == "height_guided":
        if args.heights:
            height_source = io.read_heightmap(args.heights, spec)
        else:
            height_source = heightmap_from_semantic(rasterize_gt(scene, spec))
    result = hitrate_experiment(scene, camera, spec, cfg, args.mode, height_source)
    io.write_csv(
        args.out_csv,
        list(result.records.dtype.names),
        (tuple(rec[name] for name in result.records.dtype.names) for rec in result.records),
    )
    report = {
        "mode": args.mode,
        "hit_rate": result.hit_rate,
        "n_cells": result.n_cells,
        "n_points": result.n_points,
    }
    with open(args.out_json, "w", encoding="utf-8", newline="\n") as f:
        json.dump(report, f, sort_keys=True)
        f.write("\n")
    print(json.dumps(report, sort_keys=True))
    return 0


def _cmd_exp_heighterr(args) -> int:
    scene = io.read_scene(args.scene)
    lidar = io.read_lidar_spec(args.lidar)
    spec = io.read_grid_spec(args.spec)
    h_lidar = heightmap_from_points(simulate_lidar(scene, lidar), spec)
    h_gt = heightmap_from_semantic(rasterize_gt(scene, spec))
    stats = height_error_stats(h_lidar, h_gt)
    report = {
        "mean_abs": stats.mean_abs,
        "n_cells": stats.n_cells,
        "histogram": {repr(float(c)): int(n) for c, n in zip(stats.bin_centers, stats.counts)},
    }
    with open(args.out_json, "w", encoding="utf-8", newline="\n") as f:
        json.dump(report, f, sort_keys=True)
        f.write("\n")
    if args.out_csv:
        io.write_csv(args.out_csv, ["bin_center", "count"],
                     zip(stats.bin_centers, stats.counts))
    print(json.dumps(report, sort_keys=True))
    return 0


_COMMANDS = {
    "heightmap": _cmd_heightmap,
    "gtheight": _cmd_gtheight,
    "mix": _cmd_mix,
    "sample": _cmd_sample,
    "project": _cmd_project,
    "eval": _cmd_eval,
    "sim": _cmd_sim,
    "exp-hitrate": _cmd_exp_hitrate,
    "exp-heighterr": _cmd_exp_heighterr,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"{PROG}: error: {e}", file=sys.stderr)
        return 1
    kernels.set_threads(args.threads)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError, IndexError, KeyError, json.JSONDecodeError) as e:
        print(f"{PROG}: error: {e}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
