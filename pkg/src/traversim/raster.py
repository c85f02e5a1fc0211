"""Rasterization of (map, trajectory) pairs into 129x129x3 sample tensors.

Channel order: terrain elevation, trajectory centerline, wheel trace.
Pixel (r, c) maps to world (x, y) relative to the robot start, with
x in [-4, +4] left to right, y in [-4, +4] bottom to top, and the robot
at the center pixel facing +y.

Both footprint channels use a shared decay profile g(d): exactly 1 on the
path, exactly 0 at the half-width, a shifted exponential between. The
wheel-trace channel sums a front-wheel pass and a rear-wheel pass at 0.5
peak each, so cells crossed by both wheels saturate to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .actions import Trajectory
from .robot import RobotConfig, wheel_offsets
from .terrain import DEFAULT_CELL_SIZE, DEFAULT_SIDE_CELLS, ElevationMap

DEFAULT_DECAY = 3.0
DEFAULT_HEIGHT_NORM = 1.0


@dataclass(frozen=True)
class SampleTensor:
    """One exported dataset sample: three stacked channels plus its keys."""

    data: np.ndarray  # (side, side, 3), values in [0, 1]
    map_id: int
    traj_id: int


def decay_profile(dist, half_width: float, lam: float = DEFAULT_DECAY):
    """Shifted exponential falloff: 1 at 0, 0 at ``half_width`` and beyond."""
    dist = np.asarray(dist, dtype=np.float64)
    scale = math.exp(-lam)
    with np.errstate(over="ignore"):
        val = (np.exp(-lam * dist / half_width) - scale) / (1.0 - scale)
    return np.where(dist < half_width, np.maximum(val, 0.0), 0.0)


def _pixel_axes(side_cells: int, cell_size: float):
    half = (side_cells - 1) / 2.0
    xs = (np.arange(side_cells) - half) * cell_size
    ys = (half - np.arange(side_cells)) * cell_size
    return xs, ys


def _min_distance_field(points: np.ndarray, side_cells: int, cell_size: float,
                        max_dist: float) -> np.ndarray:
    """Exact point-to-segment distance from each pixel to a polyline.

    Pixels farther than ``max_dist`` from the polyline bounding box are
    skipped (their distance is reported as ``max_dist``), which keeps the
    segment sweep small without changing any value below the cutoff.
    """
    xs, ys = _pixel_axes(side_cells, cell_size)
    field = np.full((side_cells, side_cells), max_dist, dtype=np.float64)

    col_mask = (xs >= points[:, 0].min() - max_dist) & (xs <= points[:, 0].max() + max_dist)
    row_mask = (ys >= points[:, 1].min() - max_dist) & (ys <= points[:, 1].max() + max_dist)
    if not col_mask.any() or not row_mask.any():
        return field

    sub_x = xs[col_mask]
    sub_y = ys[row_mask]
    xx, yy = np.meshgrid(sub_x, sub_y)
    px = xx.ravel()[:, None]
    py = yy.ravel()[:, None]

    a = points[:-1]
    b = points[1:]
    ab = b - a
    len2 = np.einsum("ij,ij->i", ab, ab)[None, :]
    apx = px - a[None, :, 0]
    apy = py - a[None, :, 1]
    dot = apx * ab[None, :, 0] + apy * ab[None, :, 1]
    t = np.clip(np.divide(dot, len2, out=np.zeros_like(dot), where=len2 > 0), 0.0, 1.0)
    dx = apx - t * ab[None, :, 0]
    dy = apy - t * ab[None, :, 1]
    d2 = dx * dx + dy * dy
    dmin = np.sqrt(d2.min(axis=1)).reshape(len(sub_y), len(sub_x))
    # Projection rounding leaves ~1e-17 residues on pixels that lie
    # exactly on the polyline; snap those so on-path pixels peak at 1.
    dmin[dmin < 1e-9] = 0.0

    rows = np.nonzero(row_mask)[0]
    cols = np.nonzero(col_mask)[0]
    field[np.ix_(rows, cols)] = np.minimum(field[np.ix_(rows, cols)], dmin)
    return field


def raster_elevation(emap: ElevationMap, h_norm: float = DEFAULT_HEIGHT_NORM) -> np.ndarray:
    """Center-relative normalized elevation channel.

    0.5 is the elevation at the robot-center cell; one ``h_norm`` above
    maps to 1.0, one below to 0.0, clamped outside.
    """
    center = (emap.side_cells - 1) // 2
    z_center = emap.cells[center, center]
    return np.clip(0.5 + (emap.cells - z_center) / (2.0 * h_norm), 0.0, 1.0)


def raster_trajectory(cfg: RobotConfig, traj: Trajectory,
                      side_cells: int = DEFAULT_SIDE_CELLS,
                      cell_size: float = DEFAULT_CELL_SIZE,
                      lam: float = DEFAULT_DECAY) -> np.ndarray:
    """Trajectory-centerline channel: 1 on the path, 0 at the wheel track."""
    half_width = cfg.wheel_track / 2.0
    dist = _min_distance_field(traj.waypoints[:, :2], side_cells, cell_size, half_width)
    return decay_profile(dist, half_width, lam)


def _wheel_paths(cfg: RobotConfig, traj: Trajectory) -> np.ndarray:
    """World polylines of the four wheel centers, shape (4, n, 2)."""
    offs = wheel_offsets(cfg)
    yaw = traj.waypoints[:, 2] + math.pi / 2.0
    c = np.cos(yaw)
    s = np.sin(yaw)
    wx = traj.waypoints[:, 0][None, :] + offs[:, 0, None] * c[None, :] - offs[:, 1, None] * s[None, :]
    wy = traj.waypoints[:, 1][None, :] + offs[:, 0, None] * s[None, :] + offs[:, 1, None] * c[None, :]
    return np.stack([wx, wy], axis=2)


def raster_wheel_trace(cfg: RobotConfig, traj: Trajectory,
                       side_cells: int = DEFAULT_SIDE_CELLS,
                       cell_size: float = DEFAULT_CELL_SIZE,
                       lam: float = DEFAULT_DECAY) -> np.ndarray:
    """Wheel-trace channel: 0.5 per wheel pass, saturating where front
    and rear wheels cross the same ground."""
    half_width = cfg.wheel_width / 2.0
    paths = _wheel_paths(cfg, traj)
    fields = [
        decay_profile(_min_distance_field(paths[i], side_cells, cell_size, half_width),
                      half_width, lam)
        for i in range(4)
    ]
    front = np.maximum(fields[0], fields[1])
    rear = np.maximum(fields[2], fields[3])
    return np.clip(0.5 * front + 0.5 * rear, 0.0, 1.0)


def rasterize(cfg: RobotConfig, emap: ElevationMap, traj: Trajectory,
              map_id: int = 0, traj_id: int = 0,
              h_norm: float = DEFAULT_HEIGHT_NORM,
              lam: float = DEFAULT_DECAY) -> SampleTensor:
    """Stack the three channels for one (map, trajectory) pair."""
    if emap.side_cells != DEFAULT_SIDE_CELLS:
        raise ValueError(
            f"rasterizer expects a {DEFAULT_SIDE_CELLS}-cell map; resample on import"
        )
    elev = raster_elevation(emap, h_norm=h_norm)
    track = raster_trajectory(cfg, traj, emap.side_cells, emap.cell_size, lam=lam)
    trace = raster_wheel_trace(cfg, traj, emap.side_cells, emap.cell_size, lam=lam)
    data = np.stack([elev, track, trace], axis=2)
    return SampleTensor(data=data, map_id=map_id, traj_id=traj_id)
