"""Command-line front-end binding the pipeline into reproducible batch runs."""

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from statistics import median

import numpy as np

from .descriptor import context_rows, descriptor_key
from .evaluation import evaluate, emit_report
from .geo import PlanarPoint
from .osm import build_reference_map, load_reference_map, parse_osm, save_reference_map
from .retrieval import (LocalizationResult, RankedMatch, localize,
                        stage1_candidates, stage2_rerank)
from .scan import (BUILDING_CLASS_ID, filter_building_points, lidar_descriptor,
                   read_ground_truth, read_labels, read_velodyne_bin)
from .synth import add_scan_noise, generate_synth_world, simulate_scan

RESULTS_HEADER = "frame,rank,map_index,x,y,distance,shift"


@dataclass(frozen=True)
class RunConfig:
    max_range: float = 50.0
    bin_height: float = 5.0
    interval: float = 1.0
    top_k: int = 200
    class_id: int = BUILDING_CLASS_ID
    radius: float = 5.0
    seed: int = 0
    threads: int = 1

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        return cls(**{
            name: getattr(args, name)
            for name in cls.__dataclass_fields__
            if hasattr(args, name)
        })

    def validate(self) -> None:
        context_rows(self.max_range, self.bin_height)
        if self.interval <= 0.0:
            raise ValueError(f"--interval must be positive, got {self.interval}")
        if self.radius <= 0.0:
            raise ValueError(f"--radius must be positive, got {self.radius}")
        if self.top_k < 1:
            raise ValueError(f"--topk must be >= 1, got {self.top_k}")
        if self.threads < 1:
            raise ValueError(f"--threads must be >= 1, got {self.threads}")


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--range", dest="max_range", type=float, default=50.0,
                     help="sensor-equivalent range cutoff in meters (default: 50)")
    sub.add_argument("--bin", dest="bin_height", type=float, default=5.0,
                     help="context bin height in meters, must divide --range (default: 5)")
    sub.add_argument("--interval", type=float, default=1.0,
                     help="road interpolation step in meters (default: 1)")
    sub.add_argument("--topk", dest="top_k", type=int, default=200,
                     help="stage-1 candidates kept for re-ranking (default: 200)")
    sub.add_argument("--class-id", dest="class_id", type=int, default=BUILDING_CLASS_ID,
                     help="semantic class id of building points (default: 50)")
    sub.add_argument("--radius", type=float, default=5.0,
                     help="success radius in meters (default: 5)")
    sub.add_argument("--seed", type=int, default=0,
                     help="RNG seed for synthetic runs (default: 0)")
    sub.add_argument("--threads", type=int, default=1,
                     help="worker threads for batch steps (default: 1)")


def _require_file(path: Path) -> Path:
    if not path.is_file():
        raise ValueError(f"no such file: {path}")
    return path


def _require_dir(path: Path) -> Path:
    if not path.is_dir():
        raise ValueError(f"no such directory: {path}")
    return path


def _paired_frames(scan_dir: Path, label_dir: Path) -> list:
    """Pair scans and labels by filename stem; any orphan is an error."""
    scans = sorted(p for p in scan_dir.iterdir() if p.suffix == ".bin")
    labels = {p.stem: p for p in label_dir.iterdir() if p.suffix == ".label"}
    if not scans:
        raise ValueError(f"no .bin scans in {scan_dir}")
    for scan in scans:
        if scan.stem not in labels:
            raise ValueError(f"unpaired scan/label: {scan.stem}")
    orphans = sorted(set(labels) - {p.stem for p in scans})
    if orphans:
        raise ValueError(f"unpaired scan/label: {orphans[0]}")
    pairs = []
    for index, scan in enumerate(scans):
        frame = int(scan.stem) if scan.stem.isdigit() else index
        pairs.append((frame, scan, labels[scan.stem]))
    return pairs


def _frame_descriptor(scan_path: Path, label_path: Path, cfg: RunConfig) -> np.ndarray:
    try:
        points = read_velodyne_bin(scan_path.read_bytes())
        labels = read_labels(label_path.read_bytes())
        building = filter_building_points(points, labels, cfg.class_id)
    except ValueError as exc:
        raise ValueError(f"frame {scan_path.stem}: {exc}") from exc
    return lidar_descriptor(building, cfg.max_range)


def _ordered_map(fn, items, threads: int) -> list:
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def cmd_build_map(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    cfg.validate()
    osm_path = _require_file(Path(args.osm_path))
    t0 = time.perf_counter()
    data = parse_osm(osm_path.read_bytes(), require_layers=True)
    ref_map = build_reference_map(data, cfg.interval, cfg.max_range, cfg.bin_height,
                                  threads=cfg.threads)
    save_reference_map(ref_map, args.out_path)
    elapsed = time.perf_counter() - t0
    print(f"{len(ref_map)} map entries from {len(data.buildings)} buildings and "
          f"{len(data.roads)} roads in {elapsed:.2f} s -> {args.out_path}")
    if data.skipped_ways:
        print(f"warning: skipped {data.skipped_ways} unresolved or degenerate ways")
    return 0


def cmd_describe(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    cfg.validate()
    pairs = _paired_frames(_require_dir(Path(args.scans)), _require_dir(Path(args.labels)))

    def one(pair):
        frame, scan_path, label_path = pair
        t0 = time.perf_counter()
        desc = _frame_descriptor(scan_path, label_path, cfg)
        return frame, desc, time.perf_counter() - t0

    rows = _ordered_map(one, pairs, cfg.threads)
    with open(args.out, "w", newline="\n") as fh:
        fh.write(f"osmloc-desc v1 R={float(cfg.max_range)!r} bins=360 count={len(rows)}\n")
        for frame, desc, _ in rows:
            fh.write(f"{frame} " + " ".join(repr(float(v)) for v in desc) + "\n")
    print(f"described {len(rows)} frames (median {median(t for _, _, t in rows):.4f} s"
          f" per frame) -> {args.out}")
    return 0


def cmd_localize(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    cfg.validate()
    ref_map = load_reference_map(_require_file(Path(args.map_path)))
    pairs = _paired_frames(_require_dir(Path(args.scans)), _require_dir(Path(args.labels)))

    def one(pair):
        frame, scan_path, label_path = pair
        desc = _frame_descriptor(scan_path, label_path, cfg)
        return frame, localize(desc, ref_map, cfg.top_k)

    results = _ordered_map(one, pairs, cfg.threads)
    with open(args.out, "w", newline="\n") as fh:
        fh.write(RESULTS_HEADER + "\n")
        for frame, result in results:
            for rank, match in enumerate(result.ranked[:10], start=1):
                fh.write(f"{frame},{rank},{match.map_index},{match.position.x:.6f},"
                         f"{match.position.y:.6f},{match.distance:.9g},{match.shift}\n")
    print(f"localized {len(results)} frames against {len(ref_map)} map entries -> {args.out}")
    return 0


def _read_results_csv(path: Path) -> dict:
    by_frame: dict[int, list] = {}
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != RESULTS_HEADER:
            raise ValueError(f"{path}: expected header `{RESULTS_HEADER}`, got `{header}`")
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split(",")
            if len(fields) != 7:
                raise ValueError(f"{path} line {lineno}: expected 7 fields, got {len(fields)}")
            frame, rank = int(fields[0]), int(fields[1])
            match = RankedMatch(
                map_index=int(fields[2]),
                position=PlanarPoint(float(fields[3]), float(fields[4])),
                distance=float(fields[5]),
                shift=int(fields[6]),
            )
            by_frame.setdefault(frame, []).append((rank, match))
    return {
        frame: [m for _, m in sorted(entries)]
        for frame, entries in by_frame.items()
    }


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    cfg.validate()
    by_frame = _read_results_csv(_require_file(Path(args.results)))
    gt = read_ground_truth(_require_file(Path(args.gt)).read_text())

    missing_gt = sorted(f for f in by_frame if f not in gt)
    missing_results = sorted(f for f in gt if f not in by_frame)
    if missing_gt or missing_results:
        parts = []
        if missing_gt:
            parts.append(f"frames missing from ground truth: {missing_gt}")
        if missing_results:
            parts.append(f"frames missing from results: {missing_results}")
        raise ValueError("; ".join(parts))

    frames = sorted(by_frame)
    results = [LocalizationResult(ranked=by_frame[f], stage1_candidates=np.empty(0, np.int64))
               for f in frames]
    report = evaluate(results, [gt[f] for f in frames], radius=cfg.radius, frames=frames)
    emit_report(report, args.out)
    for n in sorted(report.summary):
        print(f"top-{n}: {report.summary[n]:.2f}% within {cfg.radius:g} m")
    print(f"report written to {args.out}")
    return 0


def _key_only_result(key, ref_map, top_k: int = 10) -> LocalizationResult:
    order = stage1_candidates(key, ref_map, top_k)
    dist = np.abs(ref_map.keys[order] - key).sum(axis=1)
    ranked = [
        RankedMatch(int(j), PlanarPoint(*ref_map.positions[j]), float(d), 0)
        for j, d in zip(order, dist)
    ]
    return LocalizationResult(ranked=ranked, stage1_candidates=order)


def cmd_synth(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    cfg.validate()
    out_dir = Path(args.out)

    world = generate_synth_world(seed=cfg.seed, blocks=args.blocks,
                                 block_size=args.block_size,
                                 street_width=args.street_width, perturb=args.perturb)
    t0 = time.perf_counter()
    ref_map = build_reference_map(world.as_osm_data(), cfg.interval, cfg.max_range,
                                  cfg.bin_height, threads=cfg.threads)
    build_time = time.perf_counter() - t0

    rng = np.random.default_rng([cfg.seed, 1])
    picks = rng.choice(len(ref_map), size=args.queries, replace=args.queries > len(ref_map))
    yaws = rng.integers(0, 360, size=args.queries)

    desc_times, stage1_times, stage2_times = [], [], []
    two_stage, key_only = [], []
    for pick, yaw in zip(picks, yaws):
        pose = (ref_map.positions[pick, 0], ref_map.positions[pick, 1], float(yaw))
        t0 = time.perf_counter()
        query = simulate_scan(world, pose, cfg.max_range)
        desc_times.append(time.perf_counter() - t0)
        if args.noise > 0.0 or args.dropout > 0.0:
            query = add_scan_noise(query, rng, args.noise, args.dropout, cfg.max_range)
        key = descriptor_key(query, cfg.bin_height, cfg.max_range)
        t0 = time.perf_counter()
        candidates = stage1_candidates(key, ref_map, cfg.top_k)
        stage1_times.append(time.perf_counter() - t0)
        t0 = time.perf_counter()
        two_stage.append(stage2_rerank(query, ref_map, candidates))
        stage2_times.append(time.perf_counter() - t0)
        key_only.append(_key_only_result(key, ref_map))

    gt = [PlanarPoint(ref_map.positions[j, 0], ref_map.positions[j, 1]) for j in picks]
    report = evaluate(two_stage, gt, radius=cfg.radius)
    report.timing = {
        "describe_s_per_frame": median(desc_times),
        "stage1_s": median(stage1_times),
        "stage2_s": median(stage2_times),
    }
    key_report = evaluate(key_only, gt, radius=cfg.radius)

    emit_report(report, out_dir)
    with open(out_dir / "stage_comparison.csv", "w", newline="\n") as fh:
        fh.write("method,top1,top5,top10\n")
        fh.write("key-only," + ",".join(f"{key_report.summary[n]:.2f}" for n in (1, 5, 10)) + "\n")
        fh.write("two-stage," + ",".join(f"{report.summary[n]:.2f}" for n in (1, 5, 10)) + "\n")
    run_params = dict(sorted({
        **asdict(cfg), "blocks": args.blocks, "block_size": args.block_size,
        "street_width": args.street_width, "perturb": args.perturb,
        "queries": args.queries, "noise": args.noise, "dropout": args.dropout,
    }.items()))
    (out_dir / "config.json").write_text(json.dumps(run_params, indent=2) + "\n")

    print(f"map: {len(ref_map)} entries built in {build_time:.2f} s")
    print("two-stage: " + " ".join(f"top{n}={report.summary[n]:.2f}%" for n in (1, 5, 10)))
    print("key-only:  " + " ".join(f"top{n}={key_report.summary[n]:.2f}%" for n in (1, 5, 10)))
    print("median seconds/frame: describe={describe_s_per_frame:.4f} "
          "stage1={stage1_s:.4f} stage2={stage2_s:.4f}".format(**report.timing))
    print(f"report written to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="osmloc",
        description="LiDAR global localization against OpenStreetMap building outlines",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("build-map", help="build a reference map from an OSM XML extract")
    p.add_argument("osm_path", help="input .osm file")
    p.add_argument("out_path", help="output reference-map file")
    _add_common_flags(p)
    p.set_defaults(func=cmd_build_map)

    p = sub.add_parser("describe", help="convert scans + labels to descriptors")
    p.add_argument("--scans", required=True, help="directory of .bin scans")
    p.add_argument("--labels", required=True, help="directory of .label files")
    p.add_argument("--out", required=True, help="output descriptor text file")
    _add_common_flags(p)
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("localize", help="localize scans against a reference map")
    p.add_argument("map_path", help="reference-map file from build-map")
    p.add_argument("--scans", required=True, help="directory of .bin scans")
    p.add_argument("--labels", required=True, help="directory of .label files")
    p.add_argument("--out", required=True, help="output CSV of ranked candidates")
    _add_common_flags(p)
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("eval", help="score localization results against ground truth")
    p.add_argument("--results", required=True, help="CSV from the localize command")
    p.add_argument("--gt", required=True, help="ground-truth file: `frame x y` per line")
    p.add_argument("--out", required=True, help="output report directory")
    _add_common_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="end-to-end synthetic benchmark (acceptance driver)")
    p.add_argument("--out", required=True, help="output report directory")
    p.add_argument("--blocks", type=int, default=6, help="city grid size (default: 6)")
    p.add_argument("--block-size", dest="block_size", type=float, default=20.0,
                   help="building footprint edge in meters (default: 20)")
    p.add_argument("--street-width", dest="street_width", type=float, default=10.0,
                   help="street width in meters (default: 10)")
    p.add_argument("--perturb", type=float, default=0.3,
                   help="per-building jitter fraction (default: 0.3)")
    p.add_argument("--queries", type=int, default=100,
                   help="number of simulated queries (default: 100)")
    p.add_argument("--noise", type=float, default=0.0,
                   help="uniform range noise magnitude in meters (default: 0)")
    p.add_argument("--dropout", type=float, default=0.0,
                   help="per-ray dropout probability (default: 0)")
    _add_common_flags(p)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
