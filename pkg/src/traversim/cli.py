"""Command-line pipeline driver.

Subcommands: gen-maps, simulate, build-dataset, evaluate, plot-fan,
import-map, dump-actions. Exit codes: 0 success, 2 usage error, 3 I/O or
parse failure, 4 data consistency failure. The TRAVERSE_SIM_PRESETS
environment variable overrides the built-in terrain preset directory.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import formats
from .actions import default_action_space, discretize, write_manifest
from .dataset import (
    DEFAULT_PRESETS,
    augment_rotations,
    build_dataset,
    import_map,
    map_master_seed,
    NonSquareGrid,
)
from .metrics import (
    KeyMismatch,
    evaluate_predictions,
    read_predictions_csv,
    render_report,
    write_report_csv,
)
from .plot import render_fan, write_ppm
from .robot import RobotConfig
from .simulate import read_labels_csv, simulate_all, write_labels_csv
from .terrain import generate_map, list_presets, load_preset

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DATA = 4


def _load_robot(path: str | None) -> RobotConfig:
    if path is None:
        return RobotConfig.default()
    return RobotConfig.from_file(path)


def cmd_gen_maps(args) -> int:
    names = list_presets()
    if args.preset not in names:
        print(f"unknown preset {args.preset!r}; available: {', '.join(names)}",
              file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["# filename preset seed"]
    for i in range(args.n):
        master = map_master_seed(args.seed, i)
        params = load_preset(args.preset, master_seed=master)
        emap = generate_map(params)
        name = f"map_{i:05}.emap"
        formats.write_emap(emap, out / name)
        lines.append(f"{name} {args.preset} {master}")
    (out / "gen_manifest.txt").write_text("\n".join(lines) + "\n")
    print(f"wrote {args.n} maps to {out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    emap = formats.read_emap(args.map)
    cfg = _load_robot(args.robot_config)
    trajs = [discretize(s) for s in default_action_space()]
    results = simulate_all(cfg, emap, trajs, workers=args.workers)
    rows = [(args.map_id, tid, res) for tid, res in enumerate(results)]
    write_labels_csv(args.out, rows)
    n_step = sum(r.label.step for r in results)
    n_obstacle = sum(r.label.obstacle for r in results)
    n_tilt = sum(r.label.tilt for r in results)
    n_safe = sum(not r.label.any for r in results)
    print(f"{len(results)} trajectories: step={n_step} obstacle={n_obstacle} "
          f"tilt={n_tilt} safe={n_safe}")
    return EXIT_OK


def cmd_build_dataset(args) -> int:
    presets = tuple(args.presets.split(",")) if args.presets else DEFAULT_PRESETS
    unknown = [p for p in presets if p not in list_presets()]
    if unknown:
        print(f"unknown presets: {', '.join(unknown)}; available: "
              f"{', '.join(list_presets())}", file=sys.stderr)
        return EXIT_USAGE
    manifest = build_dataset(
        args.out,
        n_maps=args.n_maps,
        presets=presets,
        robot_cfg=_load_robot(args.robot_config),
        split_ratios=tuple(float(r) for r in args.split_ratios.split(",")),
        balance=not args.no_balance,
        balance_cap=args.balance_cap,
        min_safe_floor=args.min_safe_floor,
        seed=args.seed,
        trajs_per_map=args.trajs_per_map,
        write_tensors=not args.no_tensors,
        workers=args.workers,
    )
    pop = manifest.population
    total = pop["safe"] + pop["failure"]
    share = 100.0 * pop["safe"] / total if total else 100.0
    print(f"maps: {manifest.n_maps}  population: {pop['safe']} safe / "
          f"{pop['failure']} failure ({share:.1f}% safe), {pop['invalid']} invalid")
    for split, c in manifest.split_counts.items():
        print(f"{split}: {c['samples']} samples ({c['safe']} safe, {c['failure']} failure)")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    predictions = read_predictions_csv(args.predictions)
    labels = read_labels_csv(args.labels)
    cms, per_event, pooled = evaluate_predictions(predictions, labels,
                                                  threshold=args.threshold)
    report = render_report(cms, per_event, pooled)
    report_path = Path(args.report)
    report_path.write_text(report)
    write_report_csv(report_path.with_suffix(".csv"), cms, per_event, pooled)
    print(report, end="")
    return EXIT_OK


def cmd_plot_fan(args) -> int:
    emap = formats.read_emap(args.map)
    with open(args.scores) as fh:
        header = fh.readline().strip()
    if header.startswith("map_id,traj_id,p_"):
        probs_by_key = read_predictions_csv(args.scores)
    else:
        labels = read_labels_csv(args.scores)
        probs_by_key = {k: (float(v[0]), float(v[1]), float(v[2]))
                        for k, v in labels.items()}
    map_ids = sorted({k[0] for k in probs_by_key})
    map_id = args.map_id
    if map_id is None:
        if len(map_ids) != 1:
            print(f"scores cover maps {map_ids}; pass --map-id", file=sys.stderr)
            return EXIT_DATA
        map_id = map_ids[0]
    rows = {k[1]: v for k, v in probs_by_key.items() if k[0] == map_id}
    space = default_action_space()
    if sorted(rows) != list(range(len(space))):
        print(f"scores for map {map_id} do not cover the {len(space)}-trajectory "
              "action space", file=sys.stderr)
        return EXIT_DATA
    trajs = [discretize(s) for s in space]
    out = Path(args.out)
    stem = out.with_suffix("")
    for idx, event in enumerate(("step", "obstacle", "tilt")):
        img = render_fan(emap, trajs, [rows[t][idx] for t in range(len(space))])
        write_ppm(f"{stem}_{event}.ppm", img)
    composite = [max(rows[t]) for t in range(len(space))]
    img = render_fan(emap, trajs, composite)
    write_ppm(f"{stem}_composite.ppm", img)
    print(f"wrote {stem}_{{step,obstacle,tilt,composite}}.ppm")
    return EXIT_OK


def cmd_import_map(args) -> int:
    try:
        emap = import_map(args.input, fmt=args.format, extent=args.extent)
    except NonSquareGrid as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DATA
    out = Path(args.out)
    if args.augment:
        out.mkdir(parents=True, exist_ok=True)
        for k, rotated in enumerate(augment_rotations(emap)):
            formats.write_emap(rotated, out / f"{Path(args.input).stem}_rot{k * 90}.emap")
        print(f"wrote 4 rotations to {out}")
    else:
        formats.write_emap(emap, out)
        print(f"wrote {out}")
    return EXIT_OK


def cmd_dump_actions(args) -> int:
    write_manifest(default_action_space(), args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="traversim",
        description="Procedural-terrain traversability simulation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    cpu = os.cpu_count() or 1

    p = sub.add_parser("gen-maps", help="generate elevation maps from a preset")
    p.add_argument("--n", type=int, required=True, help="number of maps")
    p.add_argument("--preset", default="plains")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen_maps)

    p = sub.add_parser("simulate", help="label one map over the full action space")
    p.add_argument("--map", required=True, help="EMAP file")
    p.add_argument("--robot-config", default=None)
    p.add_argument("--map-id", type=int, default=0, help="map_id for the CSV rows")
    p.add_argument("--workers", type=int, default=cpu)
    p.add_argument("--out", required=True, help="labels CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("build-dataset", help="generate, simulate, balance, rasterize")
    p.add_argument("--n-maps", type=int, required=True)
    p.add_argument("--presets", default=None,
                   help=f"comma list (default {','.join(DEFAULT_PRESETS)})")
    p.add_argument("--split-ratios", default="0.9,0.08,0.02")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-balance", action="store_true",
                   help="keep the raw safe:failure ratio in train/val")
    p.add_argument("--balance-cap", type=float, default=2.0,
                   help="max safe:failure ratio after balancing")
    p.add_argument("--min-safe-floor", type=int, default=1000,
                   help="safe samples kept per split even when failures are scarce")
    p.add_argument("--trajs-per-map", type=int, default=None,
                   help="evenly strided trajectory subset per map (default all)")
    p.add_argument("--no-tensors", action="store_true",
                   help="skip SBT shard export (labels and manifest only)")
    p.add_argument("--robot-config", default=None)
    p.add_argument("--workers", type=int, default=cpu)
    p.add_argument("--out", required=True, help="dataset directory")
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("evaluate", help="score predictions against labels")
    p.add_argument("--predictions", required=True, help="prediction CSV")
    p.add_argument("--labels", required=True, help="labels CSV")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--report", required=True,
                   help="report path (text; a .csv twin is written alongside)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("plot-fan", help="render action-space probability fans")
    p.add_argument("--map", required=True, help="EMAP file")
    p.add_argument("--scores", required=True,
                   help="prediction CSV (probabilities) or labels CSV (0/1)")
    p.add_argument("--map-id", type=int, default=None)
    p.add_argument("--out", required=True,
                   help="image path stem; one PPM per event plus a composite "
                        "(bands: green <0.25, yellow 0.25-0.5 inclusive, red >0.5)")
    p.set_defaults(func=cmd_plot_fan)

    p = sub.add_parser("import-map", help="convert external grids to EMAP")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("auto", "emap", "text"), default="auto")
    p.add_argument("--extent", type=float, default=8.0,
                   help="world extent of text grids, meters")
    p.add_argument("--augment", action="store_true",
                   help="write the four quarter-turn rotations into --out directory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_import_map)

    p = sub.add_parser("dump-actions", help="write the action-space manifest")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dump_actions)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KeyMismatch as exc:
        print(f"data mismatch: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (formats.ParseError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
