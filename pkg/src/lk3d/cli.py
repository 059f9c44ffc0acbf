"""Command-line interface: extract, match, register, bench, synth.

Exit codes: 0 success, 2 I/O or format problems, 3 matching failure
(scene without enough structure), so batch scripts can tell algorithmic
failure from bad input.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import extraction, matching
from .bench import run_latency_bench
from .config import PipelineConfig
from .descriptor import generate_descriptors, read_descriptors, write_descriptors, write_descriptors_csv
from .extraction import write_keypoints
from .matching import write_correspondences_csv, write_matches_csv
from .registration import (format_pose_line, read_poses, register_scans,
                           rotation_error, translation_error)
from .scan_io import (EmptyScanError, FormatError, LidarScan, read_kitti_bin,
                      read_pcd_ascii, read_scan, sensor_preset, write_scan)
from .synth import SceneSpec, generate_scene, transformed_pair

EXIT_OK = 0
EXIT_IO = 2
EXIT_MATCH_FAILURE = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lk3d",
                                     description="LiDAR edge keypoints, descriptors, matching, registration")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", choices=["hdl64", "vlp16"], default=None,
                        help="sensor preset (ring count, FOV, scan-line threshold)")
    common.add_argument("--config", metavar="FILE", default=None,
                        help="key=value config file; CLI flags override it")
    common.add_argument("--k-anchors", type=int, default=None, metavar="K",
                        help="nearest-anchor count for descriptor merging")
    common.add_argument("--score-threshold", type=int, default=None)
    common.add_argument("--dim-tolerance", type=float, default=None)
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--no-figures", action="store_true",
                        help="skip figure rendering next to the outputs")

    p = sub.add_parser("extract", parents=[common],
                       help="extract keypoints and descriptors from one scan")
    p.add_argument("input")
    p.add_argument("-o", "--out-dir", required=True)
    p.add_argument("--input-format", choices=["kitti-bin", "pcd", "lk3dscan"], default=None)

    p = sub.add_parser("match", parents=[common],
                       help="match two scans (or two descriptor dumps)")
    p.add_argument("input_a")
    p.add_argument("input_b")
    p.add_argument("-o", "--out-dir", required=True)
    p.add_argument("--input-format", choices=["kitti-bin", "pcd", "lk3dscan", "lk3ddesc"], default=None)
    p.add_argument("--ground-truth", metavar="POSE_FILE", default=None,
                   help="12-number [R|t] line; prints the match inlier fraction at 0.5 m")

    p = sub.add_parser("register", parents=[common],
                       help="estimate the rigid pose between two scans")
    p.add_argument("input_a")
    p.add_argument("input_b")
    p.add_argument("-o", "--out-dir", default=None)
    p.add_argument("--input-format", choices=["kitti-bin", "pcd", "lk3dscan"], default=None)
    p.add_argument("--ground-truth", metavar="POSE_FILE", default=None,
                   help="12-number [R|t] line; enables error metrics")
    p.add_argument("--use-centroids", action="store_true")
    p.add_argument("--ransac", action="store_true")

    p = sub.add_parser("bench", parents=[common], help="latency benchmark")
    p.add_argument("--points", type=int, default=120_000)
    p.add_argument("--repetitions", type=int, default=20)
    p.add_argument("--match-keypoints", type=int, default=2000)
    p.add_argument("-o", "--out-dir", default=None)

    p = sub.add_parser("synth", parents=[common], help="generate synthetic scenes")
    p.add_argument("-o", "--out-dir", required=True)
    p.add_argument("--poles", type=int, default=40)
    p.add_argument("--area", type=float, default=30.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--yaw", type=float, default=None,
                   help="also emit a transformed copy rotated by this yaw (degrees)")
    p.add_argument("--tx", type=float, default=0.0)
    p.add_argument("--ty", type=float, default=0.0)
    p.add_argument("--tz", type=float, default=0.0)
    return parser


def _config_from_args(args) -> PipelineConfig:
    if args.config:
        cfg = PipelineConfig.load(args.config)
        if args.preset and args.preset != cfg.preset:
            cfg = cfg.with_overrides(
                preset=args.preset,
                **{"extractor.min_scan_lines": sensor_preset(args.preset).min_scan_lines})
    else:
        cfg = PipelineConfig.from_preset(args.preset or "hdl64")
    return cfg.with_overrides(**{
        "descriptor.num_anchors": args.k_anchors,
        "matcher.score_threshold": args.score_threshold,
        "matcher.dim_tolerance": args.dim_tolerance,
        "threads": args.threads,
        "seed": args.seed,
    })


def _load_scan(path: str, fmt: str | None, cfg: PipelineConfig) -> LidarScan:
    suffix = Path(path).suffix.lower()
    fmt = fmt or {".bin": "kitti-bin", ".pcd": "pcd", ".lk3dscan": "lk3dscan"}.get(suffix)
    if fmt is None:
        raise FormatError(f"{path}: cannot infer format from suffix {suffix!r}; pass --input-format")
    if fmt == "kitti-bin":
        return read_kitti_bin(path, cfg.sensor)
    if fmt == "pcd":
        return read_pcd_ascii(path, cfg.sensor)
    if fmt == "lk3dscan":
        return read_scan(path)
    raise FormatError(f"unsupported scan format {fmt!r}")


def _extract_pipeline(scan: LidarScan, cfg: PipelineConfig):
    t0 = time.perf_counter()
    edges = extraction.extract_edge_points(scan, cfg.extractor, threads=cfg.threads)
    clusters, keypoints = extraction.aggregate_keypoints(edges, cfg.extractor)
    t1 = time.perf_counter()
    descriptors = generate_descriptors(keypoints, cfg.descriptor, threads=cfg.threads)
    t2 = time.perf_counter()
    return edges, clusters, keypoints, descriptors, (t1 - t0) * 1e3, (t2 - t1) * 1e3


def cmd_extract(args) -> int:
    cfg = _config_from_args(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scan = _load_scan(args.input, args.input_format, cfg)
    edges, clusters, keypoints, descriptors, ms_extract, ms_describe = _extract_pipeline(scan, cfg)

    write_keypoints(keypoints, clusters, out / "keypoints.txt")
    write_descriptors(descriptors, out / "descriptors.lk3ddesc")
    write_descriptors_csv(descriptors, out / "descriptors.csv")
    cfg.save(out / "config.txt")
    if not args.no_figures:
        from .report import save_keypoint_figure
        save_keypoint_figure(scan, keypoints, out / "keypoints.png")
    print(f"points {len(scan)}")
    print(f"edge_points {len(edges)}")
    print(f"keypoints {len(keypoints)}")
    print(f"extract_ms {ms_extract:.2f}")
    print(f"describe_ms {ms_describe:.2f}")
    return EXIT_OK


def cmd_match(args) -> int:
    cfg = _config_from_args(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    fmt = args.input_format
    desc_input = (fmt == "lk3ddesc") or (
        fmt is None and Path(args.input_a).suffix.lower() == ".lk3ddesc")
    clusters_a = clusters_b = keypoints_a = keypoints_b = None
    if desc_input:
        desc_a = read_descriptors(args.input_a)
        desc_b = read_descriptors(args.input_b)
    else:
        scan_a = _load_scan(args.input_a, fmt, cfg)
        scan_b = _load_scan(args.input_b, fmt, cfg)
        _, clusters_a, keypoints_a, desc_a, *_ = _extract_pipeline(scan_a, cfg)
        _, clusters_b, keypoints_b, desc_b, *_ = _extract_pipeline(scan_b, cfg)

    t0 = time.perf_counter()
    pairs = matching.match(desc_a, desc_b, cfg.matcher)
    ms_match = (time.perf_counter() - t0) * 1e3
    write_matches_csv(pairs, out / "matches.csv")
    cfg.save(out / "config.txt")

    if clusters_a is not None:
        correspondences = matching.expand_to_edge_matches(pairs, clusters_a, clusters_b)
        write_correspondences_csv(correspondences, out / "correspondences.csv")
        print(f"correspondences {len(correspondences)}")
        if args.ground_truth:
            gt = read_poses(args.ground_truth)[0]
            inliers = sum(
                np.linalg.norm(gt.apply(keypoints_a[p.index_a].centroid)
                               - keypoints_b[p.index_b].centroid) <= 0.5
                for p in pairs)
            fraction = inliers / len(pairs) if pairs else 0.0
            print(f"inliers {inliers}")
            print(f"inlier_fraction {fraction:.4f}")
        if not args.no_figures:
            from .report import save_match_figure
            save_match_figure(keypoints_a, keypoints_b, pairs, out / "matches.png")
    print(f"matches {len(pairs)}")
    print(f"match_ms {ms_match:.2f}")
    return EXIT_OK


def cmd_register(args) -> int:
    cfg = _config_from_args(args).with_overrides(
        use_centroids=args.use_centroids or None, use_ransac=args.ransac or None)
    scan_a = _load_scan(args.input_a, args.input_format, cfg)
    scan_b = _load_scan(args.input_b, args.input_format, cfg)
    result = register_scans(scan_a, scan_b, cfg)

    out = Path(args.out_dir) if args.out_dir else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
        cfg.save(out / "config.txt")
    if not result.success:
        print(f"matching failure: {result.failure_reason}", file=sys.stderr)
        print(f"matches {result.num_matches}")
        print(f"correspondences {result.num_correspondences}")
        return EXIT_MATCH_FAILURE

    print(format_pose_line(result.pose))
    metrics = {
        "matches": result.num_matches,
        "correspondences": result.num_correspondences,
        "inliers": result.num_inliers,
        "residual_m": f"{result.rms_residual:.6f}",
        "time_ms": f"{result.time_ms:.2f}",
    }
    if args.ground_truth:
        gt = read_poses(args.ground_truth)[0]
        metrics["angular_err_deg"] = f"{rotation_error(result.pose.rotation, gt.rotation):.6f}"
        metrics["transl_err_m"] = f"{translation_error(result.pose.translation, gt.translation):.6f}"
    for key, value in metrics.items():
        print(f"{key} {value}")
    if out:
        (out / "pose.txt").write_text(format_pose_line(result.pose) + "\n")
        (out / "metrics.txt").write_text("".join(f"{k} {v}\n" for k, v in metrics.items()))
        if not args.no_figures:
            from .report import save_residual_figure
            save_residual_figure([result.rms_residual], out / "residuals.png")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _config_from_args(args)
    report = run_latency_bench(scan_size=args.points, repetitions=args.repetitions,
                               match_keypoints=args.match_keypoints, seed=cfg.seed,
                               threads=cfg.threads, extractor=cfg.extractor,
                               descriptor=cfg.descriptor, matcher=cfg.matcher)
    print(report.to_json())
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "bench.json").write_text(report.to_json() + "\n")
        if not args.no_figures:
            from .report import save_latency_figure
            save_latency_figure(report, out / "latency.png")
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = _config_from_args(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rings = cfg.sensor.num_rings
    spec = SceneSpec(num_poles=args.poles, area=args.area, rings=rings,
                     noise_sigma=args.noise, seed=cfg.seed)
    if args.yaw is None and args.tx == args.ty == args.tz == 0.0:
        scan, poles = generate_scene(spec)
        write_scan(scan, out / "scan_a.lk3dscan")
        np.savetxt(out / "poles.csv", poles, delimiter=",", header="x,y,z", comments="")
        print(f"scan_a {len(scan)} points, {len(poles)} poles")
    else:
        yaw = args.yaw or 0.0
        scan_a, scan_b, gt = transformed_pair(spec, yaw, (args.tx, args.ty, args.tz))
        write_scan(scan_a, out / "scan_a.lk3dscan")
        write_scan(scan_b, out / "scan_b.lk3dscan")
        (out / "gt_pose.txt").write_text(format_pose_line(gt) + "\n")
        print(f"scan_a {len(scan_a)} points, scan_b {len(scan_b)} points")
        print(f"gt_pose yaw {yaw} deg, t ({args.tx}, {args.ty}, {args.tz})")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {
        "extract": cmd_extract,
        "match": cmd_match,
        "register": cmd_register,
        "bench": cmd_bench,
        "synth": cmd_synth,
    }[args.command]
    try:
        return handler(args)
    except (FileNotFoundError, IsADirectoryError, PermissionError,
            FormatError, EmptyScanError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
