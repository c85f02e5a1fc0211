"""Dataset assembly: generate maps, simulate, balance, rasterize, shard.

The pipeline is map generation (round-robin over named presets) ->
traverse simulation of the trajectory library -> split assignment BY MAP
(so near-identical terrain never straddles train/test) -> optional
rebalancing of train/val by subsampling safe trajectories -> raster
export as SBT shards. The test split always keeps every sample.

Everything is keyed by (map_id, traj_id) and derived deterministically
from one master seed; rebuilding with the same inputs reproduces every
file byte for byte.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import formats
from .actions import default_action_space, discretize
from .raster import rasterize
from .robot import RobotConfig
from .simulate import simulate_all, write_labels_csv
from .terrain import ElevationMap, generate_map, load_preset

DEFAULT_PRESETS = ("plains", "dunes", "boulders", "terraces", "mountains", "mesas")
SPLITS = ("train", "val", "test")
DEFAULT_RATIOS = (0.9, 0.08, 0.02)
SHARD_SAMPLES = 4096


class InvalidRatios(ValueError):
    """Split ratios do not form a partition."""


class NonSquareGrid(ValueError):
    """Imported grid is not square."""


@dataclass
class DatasetManifest:
    """Everything needed to audit or reproduce one dataset build."""

    seed: int
    n_maps: int
    presets: tuple
    split_ratios: tuple
    balance: bool
    balance_cap: float
    min_safe_floor: int
    trajs_per_map: int | None
    map_split: dict = field(default_factory=dict)      # map_id -> split
    map_preset: dict = field(default_factory=dict)     # map_id -> preset name
    map_seed: dict = field(default_factory=dict)       # map_id -> noise master seed
    split_counts: dict = field(default_factory=dict)   # split -> {samples, safe, failure}
    population: dict = field(default_factory=dict)     # {safe, failure, invalid}
    shards: list = field(default_factory=list)         # (filename, sample_count)
    format_version: int = 1

    def write(self, path) -> None:
        lines = [f"traversim-dataset v{self.format_version}"]
        lines.append(f"seed: {self.seed}")
        lines.append(f"maps: {self.n_maps}")
        lines.append(f"presets: {','.join(self.presets)}")
        lines.append(f"split_ratios: {','.join(repr(r) for r in self.split_ratios)}")
        lines.append(f"balance: {str(self.balance).lower()}")
        lines.append(f"balance_cap: {self.balance_cap!r}")
        lines.append(f"min_safe_floor: {self.min_safe_floor}")
        lines.append(f"trajs_per_map: {self.trajs_per_map if self.trajs_per_map else 'all'}")
        lines.append(f"population_safe: {self.population.get('safe', 0)}")
        lines.append(f"population_failure: {self.population.get('failure', 0)}")
        lines.append(f"population_invalid: {self.population.get('invalid', 0)}")
        lines.append("")
        lines.append("[splits]")
        lines.append("# split maps samples safe failure")
        for split in SPLITS:
            c = self.split_counts.get(split, {"samples": 0, "safe": 0, "failure": 0})
            n_maps = sum(1 for s in self.map_split.values() if s == split)
            lines.append(f"{split} {n_maps} {c['samples']} {c['safe']} {c['failure']}")
        lines.append("")
        lines.append("[maps]")
        lines.append("# map_id split preset seed")
        for map_id in sorted(self.map_split):
            lines.append(
                f"{map_id} {self.map_split[map_id]} {self.map_preset[map_id]} "
                f"{self.map_seed[map_id]}"
            )
        lines.append("")
        lines.append("[shards]")
        lines.append("# filename samples")
        for name, count in self.shards:
            lines.append(f"{name} {count}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def read(cls, path) -> "DatasetManifest":
        text = Path(path).read_text().splitlines()
        if not text or not text[0].startswith("traversim-dataset v"):
            raise ValueError(f"{path}: not a dataset manifest")
        header: dict[str, str] = {}
        section = None
        manifest = None
        rows: dict[str, list] = {"splits": [], "maps": [], "shards": []}
        for raw in text[1:]:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1]
                continue
            if section is None:
                key, _, val = line.partition(":")
                header[key.strip()] = val.strip()
            else:
                rows[section].append(line.split())
        tp = header["trajs_per_map"]
        manifest = cls(
            seed=int(header["seed"]),
            n_maps=int(header["maps"]),
            presets=tuple(header["presets"].split(",")),
            split_ratios=tuple(float(r) for r in header["split_ratios"].split(",")),
            balance=header["balance"] == "true",
            balance_cap=float(header["balance_cap"]),
            min_safe_floor=int(header["min_safe_floor"]),
            trajs_per_map=None if tp == "all" else int(tp),
        )
        manifest.population = {
            "safe": int(header["population_safe"]),
            "failure": int(header["population_failure"]),
            "invalid": int(header["population_invalid"]),
        }
        for split, _n_maps, samples, safe, failure in rows["splits"]:
            manifest.split_counts[split] = {
                "samples": int(samples), "safe": int(safe), "failure": int(failure),
            }
        for map_id, split, preset, seed in rows["maps"]:
            manifest.map_split[int(map_id)] = split
            manifest.map_preset[int(map_id)] = preset
            manifest.map_seed[int(map_id)] = int(seed)
        manifest.shards = [(name, int(count)) for name, count in rows["shards"]]
        return manifest


def map_master_seed(dataset_seed: int, map_id: int) -> int:
    """Stable per-map noise seed derived from the dataset seed."""
    ss = np.random.SeedSequence(entropy=dataset_seed, spawn_key=(map_id,))
    return int(ss.generate_state(1, np.uint64)[0])


def split_counts(n_maps: int, ratios) -> dict[str, int]:
    """Allocate maps to splits by largest remainder; exact for 0.9/0.08/0.02."""
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != len(SPLITS) or any(r < 0 for r in ratios):
        raise InvalidRatios(f"need {len(SPLITS)} nonnegative ratios, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise InvalidRatios(f"ratios must sum to 1, got {sum(ratios)}")
    raw = [n_maps * r for r in ratios]
    counts = [math.floor(v) for v in raw]
    remainders = sorted(
        range(len(SPLITS)), key=lambda i: (raw[i] - counts[i], -i), reverse=True
    )
    for i in range(n_maps - sum(counts)):
        counts[remainders[i % len(SPLITS)]] += 1
    return dict(zip(SPLITS, counts))


def assign_splits(n_maps: int, ratios, seed: int) -> dict[int, str]:
    """Random map -> split assignment at the given ratios."""
    counts = split_counts(n_maps, ratios)
    order = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0xA55,)))
    perm = order.permutation(n_maps)
    assignment = {}
    at = 0
    for split in SPLITS:
        for map_id in perm[at:at + counts[split]]:
            assignment[int(map_id)] = split
        at += counts[split]
    return assignment


def select_trajectory_ids(n_total: int, trajs_per_map: int | None) -> np.ndarray:
    """Evenly strided trajectory-ID subset (stable across runs)."""
    if trajs_per_map is None or trajs_per_map >= n_total:
        return np.arange(n_total)
    if trajs_per_map < 1:
        raise ValueError("trajs_per_map must be at least 1")
    return np.unique(np.round(np.linspace(0, n_total - 1, trajs_per_map)).astype(int))


def balance_safe_subsample(samples, rng, cap: float, floor: int):
    """Drop excess safe samples; failures are never removed.

    ``samples`` is a list of (key, is_failure). Keeps all failures plus a
    uniform random subset of safe keys, at most max(cap * n_failure,
    floor). Returns the retained keys in their original order.
    """
    fail_keys = [k for k, bad in samples if bad]
    safe_keys = [k for k, bad in samples if not bad]
    keep_n = min(len(safe_keys), max(int(round(cap * len(fail_keys))), floor))
    picked = rng.choice(len(safe_keys), size=keep_n, replace=False) if safe_keys else []
    keep_safe = {safe_keys[i] for i in np.sort(np.asarray(picked, dtype=int))}
    retained = set(fail_keys) | keep_safe
    return [k for k, _ in samples if k in retained]


def build_dataset(
    out_dir,
    n_maps: int,
    presets=DEFAULT_PRESETS,
    robot_cfg: RobotConfig | None = None,
    split_ratios=DEFAULT_RATIOS,
    balance: bool = True,
    balance_cap: float = 2.0,
    min_safe_floor: int = 1000,
    seed: int = 0,
    trajs_per_map: int | None = None,
    write_tensors: bool = True,
    workers: int = 1,
) -> DatasetManifest:
    """Run the full pipeline and write maps, labels, shards, manifest.

    Output layout under ``out_dir``: ``manifest.txt``, ``labels.csv``,
    ``maps/map_{id:05}.emap`` and, when ``write_tensors`` is set,
    ``shards/shard_{split}_{index:05}.sbt``. Returns the manifest.
    """
    out = Path(out_dir)
    (out / "maps").mkdir(parents=True, exist_ok=True)
    if robot_cfg is None:
        robot_cfg = RobotConfig.default()
    presets = tuple(presets)

    space = default_action_space()
    traj_ids = select_trajectory_ids(len(space), trajs_per_map)
    trajs = [discretize(space[i]) for i in traj_ids]

    manifest = DatasetManifest(
        seed=seed, n_maps=n_maps, presets=presets,
        split_ratios=tuple(split_ratios), balance=balance,
        balance_cap=balance_cap, min_safe_floor=min_safe_floor,
        trajs_per_map=trajs_per_map,
    )
    manifest.map_split = assign_splits(n_maps, split_ratios, seed)

    params_by_map = {}
    for map_id in range(n_maps):
        preset = presets[map_id % len(presets)]
        master = map_master_seed(seed, map_id)
        manifest.map_preset[map_id] = preset
        manifest.map_seed[map_id] = master
        params_by_map[map_id] = load_preset(preset, master_seed=master)

    def run_map(map_id: int):
        emap = generate_map(params_by_map[map_id])
        # Quantize to the EMAP storage precision before labeling so that
        # simulating or rasterizing the saved file reproduces the exported
        # data exactly.
        stored = ElevationMap(emap.cells.astype(np.float32).astype(np.float64),
                              cell_size=emap.cell_size, origin=emap.origin)
        results = simulate_all(robot_cfg, stored, trajs, workers=1)
        return map_id, stored, results

    maps: dict[int, ElevationMap] = {}
    results_by_map: dict[int, list] = {}
    if workers > 1 and n_maps > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for map_id, emap, results in pool.map(run_map, range(n_maps)):
                maps[map_id] = emap
                results_by_map[map_id] = results
    else:
        for map_id in range(n_maps):
            _, emap, results = run_map(map_id)
            maps[map_id] = emap
            results_by_map[map_id] = results

    label_rows = []
    for map_id in range(n_maps):
        formats.write_emap(maps[map_id], out / "maps" / f"map_{map_id:05}.emap")
        for tid, res in zip(traj_ids, results_by_map[map_id]):
            label_rows.append((map_id, int(tid), res))
    write_labels_csv(out / "labels.csv", label_rows)

    by_result = {(m, t): r for m, t, r in label_rows}
    n_invalid = sum(1 for r in by_result.values() if not r.valid)
    n_fail = sum(1 for r in by_result.values() if r.valid and r.label.any)
    n_safe = sum(1 for r in by_result.values() if r.valid and not r.label.any)
    manifest.population = {"safe": n_safe, "failure": n_fail, "invalid": n_invalid}

    # Per-split retained sample keys (valid only; train/val optionally balanced).
    retained: dict[str, list] = {}
    for si, split in enumerate(SPLITS):
        keys = [
            k for k in sorted(by_result)
            if manifest.map_split[k[0]] == split and by_result[k].valid
        ]
        if balance and split in ("train", "val"):
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=seed, spawn_key=(0xBA1, si))
            )
            marked = [(k, by_result[k].label.any) for k in keys]
            keys = balance_safe_subsample(marked, rng, balance_cap, min_safe_floor)
        retained[split] = keys
        manifest.split_counts[split] = {
            "samples": len(keys),
            "safe": sum(1 for k in keys if not by_result[k].label.any),
            "failure": sum(1 for k in keys if by_result[k].label.any),
        }

    if write_tensors:
        (out / "shards").mkdir(exist_ok=True)
        traj_by_id = dict(zip((int(t) for t in traj_ids), trajs))

        def raster_one(key):
            map_id, traj_id = key
            res = by_result[key]
            tensor = rasterize(robot_cfg, maps[map_id], traj_by_id[traj_id],
                               map_id=map_id, traj_id=traj_id)
            label = (res.label.step, res.label.obstacle, res.label.tilt)
            return key, label, tensor.data

        pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
        try:
            for split in SPLITS:
                keys = retained[split]
                for shard_idx in range(math.ceil(len(keys) / SHARD_SAMPLES)):
                    chunk = keys[shard_idx * SHARD_SAMPLES:(shard_idx + 1) * SHARD_SAMPLES]
                    name = f"shard_{split}_{shard_idx:05}.sbt"
                    with formats.SbtWriter(out / "shards" / name, len(chunk)) as writer:
                        for lo in range(0, len(chunk), 256):
                            batch = chunk[lo:lo + 256]
                            if pool is not None:
                                produced = list(pool.map(raster_one, batch))
                            else:
                                produced = [raster_one(k) for k in batch]
                            for (mid, tid), label, data in produced:
                                writer.add(mid, tid, label, data)
                    manifest.shards.append((name, len(chunk)))
        finally:
            if pool is not None:
                pool.shutdown()

    manifest.write(out / "manifest.txt")
    return manifest


# -- external map import -------------------------------------------------------


def resample_to(emap: ElevationMap, side_cells: int) -> ElevationMap:
    """Bilinearly resample a map to a new grid, preserving its extent."""
    if emap.side_cells == side_cells:
        return emap
    new_cell = emap.extent / (side_cells - 1)
    half = (side_cells - 1) / 2.0
    xs = emap.origin[0] + (np.arange(side_cells) - half) * new_cell
    ys = emap.origin[1] + (half - np.arange(side_cells)) * new_cell
    xx, yy = np.meshgrid(xs, ys)
    cells = emap._bilinear(xx, yy)
    return ElevationMap(cells, cell_size=new_cell, origin=emap.origin)


def import_map(path, fmt: str = "auto", target_side: int = 129,
               extent: float = 8.0) -> ElevationMap:
    """Load an external elevation map and adapt it to the pipeline grid.

    ``fmt`` is "emap", "text", or "auto" (sniffed from the magic bytes).
    Text grids carry no geometry, so they are assumed to span ``extent``
    meters. Non-129 grids are bilinearly resampled.
    """
    path = Path(path)
    if fmt == "auto":
        with open(path, "rb") as fh:
            fmt = "emap" if fh.read(4) == formats.EMAP_MAGIC else "text"
    if fmt == "emap":
        emap = formats.read_emap(path)
    elif fmt == "text":
        cells = formats.read_text_grid(path, cell_size=0.0)
        if cells.ndim != 2 or cells.shape[0] != cells.shape[1]:
            raise NonSquareGrid(f"{path}: grid is {cells.shape}, expected square")
        if cells.shape[0] < 2:
            raise formats.ParseError(f"{path}: grid too small")
        emap = ElevationMap(cells, cell_size=extent / (cells.shape[0] - 1))
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return resample_to(emap, target_side)


def augment_rotations(emap: ElevationMap) -> list[ElevationMap]:
    """The map plus its three quarter-turn grid rotations (CCW)."""
    return [
        ElevationMap(np.rot90(emap.cells, k).copy(), cell_size=emap.cell_size,
                     origin=emap.origin)
        for k in range(4)
    ]
