"""Traverse simulation: the ground-truth failure labeling oracle.

The robot is placed on successive trajectory waypoints (trajectories are
relative to the map center) and three failure events are checked at each:

* step      - any wheel's contact elevation changes by more than
              ``max_step`` between consecutive placements; the placement
              before the initial point turn serves as the predecessor of
              waypoint 0, so the turn itself is checked too,
* obstacle  - any map cell whose center lies inside the rotated body
              rectangle rises more than ``ride_height`` above the fitted
              wheel-contact plane,
* tilt      - the contact-plane inclination to vertical exceeds
              ``max_tilt``.

All limits are strict: an excursion exactly at the limit is safe. Labels
latch at first occurrence; evaluation continues so every event gets its
first-failure index. A traverse that would sample outside the map is
flagged invalid rather than raising.

``simulate_all`` evaluates whole trajectory libraries with vectorized
pose batches and an optional thread pool; results are written into
index-addressed slots, so output is identical for any worker count.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import maximum_filter

from .actions import PrimitiveSpec, Trajectory, discretize
from .robot import RobotConfig, Pose, WheelContacts, fit_contact_plane, wheel_offsets
from .terrain import ElevationMap

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    _HAVE_NUMBA = False


@dataclass(frozen=True)
class FailureLabel:
    """Per-trajectory failure triple."""

    step: bool
    obstacle: bool
    tilt: bool

    @property
    def any(self) -> bool:
        return self.step or self.obstacle or self.tilt


@dataclass(frozen=True)
class TraverseResult:
    """Outcome of simulating one trajectory on one map.

    ``first_*`` hold the waypoint index of the first occurrence of each
    event (present iff the corresponding label bit is set). ``valid`` is
    False when the traverse left the map; labels then cover only the
    waypoints before the exit.
    """

    label: FailureLabel
    first_step: int | None
    first_obstacle: int | None
    first_tilt: int | None
    valid: bool


def check_step(prev: WheelContacts, curr: WheelContacts, max_step: float) -> bool:
    """True iff any wheel's elevation jumped more than ``max_step``."""
    dz = np.abs(curr.z - prev.z)
    return bool(np.any(dz > max_step))


def check_tilt(pose: Pose, max_tilt: float) -> bool:
    """True iff the chassis inclination strictly exceeds ``max_tilt``."""
    return pose.tilt > max_tilt


def check_obstacle(cfg: RobotConfig, emap: ElevationMap, pose: Pose,
                   contacts: WheelContacts) -> bool:
    """True iff terrain under the body clears the contact plane by more
    than the ride height.

    Tests every map cell whose center falls inside the yaw-rotated body
    rectangle (no interpolation) against the plane fitted through the
    wheel contacts.
    """
    p, q, r = fit_contact_plane(cfg, contacts.z)
    half = (emap.side_cells - 1) / 2.0
    reach = cfg.half_diagonal
    cs = emap.cell_size

    col_c = (pose.x - emap.origin[0]) / cs + half
    row_c = half - (pose.y - emap.origin[1]) / cs
    w = math.ceil(reach / cs + 0.5)
    i0 = int(round(row_c))
    j0 = int(round(col_c))
    ii = np.arange(i0 - w, i0 + w + 1)
    jj = np.arange(j0 - w, j0 + w + 1)
    in_i = (ii >= 0) & (ii < emap.side_cells)
    in_j = (jj >= 0) & (jj < emap.side_cells)
    ii_g, jj_g = np.meshgrid(ii.clip(0, emap.side_cells - 1), jj.clip(0, emap.side_cells - 1),
                             indexing="ij")
    in_range = in_i[:, None] & in_j[None, :]

    cx = emap.origin[0] + (jj_g - half) * cs
    cy = emap.origin[1] + (half - ii_g) * cs
    dxc = cx - pose.x
    dyc = cy - pose.y
    c, s = math.cos(pose.yaw), math.sin(pose.yaw)
    xi = dxc * c + dyc * s
    eta = -dxc * s + dyc * c
    inside = (
        in_range
        & (np.abs(xi) <= cfg.body_length / 2.0)
        & (np.abs(eta) <= cfg.body_width / 2.0)
    )
    plane_z = r + p * xi + q * eta
    z = emap.cells[ii_g, jj_g]
    return bool(np.any(inside & (z - plane_z > cfg.ride_height)))


# -- batched evaluation ------------------------------------------------------


def _obstacle_scan_py(cells, i0, j0, px, py, cos_y, sin_y, p, q, r,
                      half, cs, ox, oy, bl2, bw2, rh, w, out):
    """Per-pose body-clearance scan; jitted when numba is available.

    Walks the (2w+1)^2 cell window around each pose center, keeps cells
    whose centers fall inside the rotated body rectangle, and flags the
    pose as soon as one rises more than ``rh`` above its plane.
    """
    side = cells.shape[0]
    for k in range(i0.shape[0]):
        found = False
        for di in range(-w, w + 1):
            i = i0[k] + di
            if i < 0 or i >= side:
                continue
            cy = oy + (half - i) * cs
            dyc = cy - py[k]
            for dj in range(-w, w + 1):
                j = j0[k] + dj
                if j < 0 or j >= side:
                    continue
                cx = ox + (j - half) * cs
                dxc = cx - px[k]
                xi = dxc * cos_y[k] + dyc * sin_y[k]
                if xi > bl2 or xi < -bl2:
                    continue
                eta = -dxc * sin_y[k] + dyc * cos_y[k]
                if eta > bw2 or eta < -bw2:
                    continue
                if cells[i, j] - (r[k] + p[k] * xi + q[k] * eta) > rh:
                    found = True
                    break
            if found:
                break
        out[k] = found


if _HAVE_NUMBA:
    _obstacle_scan = numba.njit(cache=True, nogil=True)(_obstacle_scan_py)
else:
    _obstacle_scan = _obstacle_scan_py


def _body_corner_offsets(cfg: RobotConfig) -> np.ndarray:
    hl = cfg.body_length / 2.0
    hw = cfg.body_width / 2.0
    return np.array([[hl, hw], [hl, -hw], [-hl, hw], [-hl, -hw]])


def _first_or_none(mask_any: bool, idx: int) -> int | None:
    return int(idx) if mask_any else None


class _BatchContext:
    """Per-(map, robot) precomputation shared across trajectory batches."""

    def __init__(self, cfg: RobotConfig, emap: ElevationMap):
        self.cfg = cfg
        self.emap = emap
        self.window_cells = math.ceil(cfg.half_diagonal / emap.cell_size + 0.5)
        size = 2 * self.window_cells + 1
        self.window_max = maximum_filter(emap.cells, size=size, mode="constant", cval=-np.inf)
        w = self.window_cells
        di, dj = np.meshgrid(np.arange(-w, w + 1), np.arange(-w, w + 1), indexing="ij")
        self.offsets_i = di.ravel()
        self.offsets_j = dj.ravel()
        # Pre-rotation placement at the map center, shared by every
        # trajectory: serves as the step predecessor of waypoint 0.
        base = self._contact_z(
            np.array([emap.origin[0]]), np.array([emap.origin[1]]), np.array([math.pi / 2.0])
        )
        self.base_contact_z = base[0]

    def _contact_z(self, px, py, yaw):
        """Wheel contact elevations for pose arrays, shape (N, 4)."""
        offs = wheel_offsets(self.cfg)  # (4, 2)
        c = np.cos(yaw)[:, None]
        s = np.sin(yaw)[:, None]
        wx = px[:, None] + offs[None, :, 0] * c - offs[None, :, 1] * s
        wy = py[:, None] + offs[None, :, 0] * s + offs[None, :, 1] * c
        return self.emap._bilinear(wx, wy)

    def _poses_valid(self, px, py, yaw):
        """All four body-rectangle corners inside the map extent."""
        corners = _body_corner_offsets(self.cfg)
        c = np.cos(yaw)[:, None]
        s = np.sin(yaw)[:, None]
        cx = px[:, None] + corners[None, :, 0] * c - corners[None, :, 1] * s
        cy = py[:, None] + corners[None, :, 0] * s + corners[None, :, 1] * c
        hx = self.emap.half_extent
        ox, oy = self.emap.origin
        ok = (np.abs(cx - ox) <= hx) & (np.abs(cy - oy) <= hx)
        return ok.all(axis=1)

    def _obstacle_flags(self, px, py, yaw, p, q, r):
        """Vectorized body-clearance check for a flat pose batch."""
        cfg, emap = self.cfg, self.emap
        n = px.shape[0]
        half = (emap.side_cells - 1) / 2.0
        cs = emap.cell_size
        col_c = (px - emap.origin[0]) / cs + half
        row_c = half - (py - emap.origin[1]) / cs
        i0 = np.rint(row_c).astype(np.intp).clip(0, emap.side_cells - 1)
        j0 = np.rint(col_c).astype(np.intp).clip(0, emap.side_cells - 1)

        # Conservative prefilter: the window max must clear the lowest
        # possible plane height under the body for a violation to exist.
        bound = (
            r
            - np.abs(p) * (cfg.body_length / 2.0)
            - np.abs(q) * (cfg.body_width / 2.0)
            + cfg.ride_height
        )
        candidate = self.window_max[i0, j0] > bound
        flags = np.zeros(n, dtype=bool)
        idx = np.nonzero(candidate)[0]
        if idx.size == 0:
            return flags

        if _HAVE_NUMBA:
            out = np.zeros(idx.size, dtype=np.bool_)
            _obstacle_scan(
                emap.cells, i0[idx], j0[idx],
                px[idx], py[idx], np.cos(yaw[idx]), np.sin(yaw[idx]),
                p[idx], q[idx], r[idx],
                half, cs, emap.origin[0], emap.origin[1],
                cfg.body_length / 2.0, cfg.body_width / 2.0, cfg.ride_height,
                self.window_cells, out,
            )
            flags[idx] = out
            return flags

        for lo in range(0, idx.size, 4096):
            sel = idx[lo:lo + 4096]
            flags[sel] = self._obstacle_exact(px[sel], py[sel], yaw[sel],
                                              p[sel], q[sel], r[sel],
                                              i0[sel], j0[sel])
        return flags

    def _obstacle_exact(self, px, py, yaw, p, q, r, i0, j0):
        cfg, emap = self.cfg, self.emap
        half = (emap.side_cells - 1) / 2.0
        cs = emap.cell_size
        ii = i0[:, None] + self.offsets_i[None, :]
        jj = j0[:, None] + self.offsets_j[None, :]
        in_range = (ii >= 0) & (ii < emap.side_cells) & (jj >= 0) & (jj < emap.side_cells)
        ii_c = ii.clip(0, emap.side_cells - 1)
        jj_c = jj.clip(0, emap.side_cells - 1)
        cx = emap.origin[0] + (jj_c - half) * cs
        cy = emap.origin[1] + (half - ii_c) * cs
        dxc = cx - px[:, None]
        dyc = cy - py[:, None]
        c = np.cos(yaw)[:, None]
        s = np.sin(yaw)[:, None]
        xi = dxc * c + dyc * s
        eta = -dxc * s + dyc * c
        inside = (
            in_range
            & (np.abs(xi) <= cfg.body_length / 2.0)
            & (np.abs(eta) <= cfg.body_width / 2.0)
        )
        plane_z = r[:, None] + p[:, None] * xi + q[:, None] * eta
        z = emap.cells[ii_c, jj_c]
        return np.any(inside & (z - plane_z > cfg.ride_height), axis=1)

    def run(self, waypoints: np.ndarray) -> list[TraverseResult]:
        """Evaluate a (T, K, 3) waypoint batch; one result per trajectory."""
        cfg, emap = self.cfg, self.emap
        n_traj, n_wp, _ = waypoints.shape
        px = (waypoints[:, :, 0] + emap.origin[0]).ravel()
        py = (waypoints[:, :, 1] + emap.origin[1]).ravel()
        yaw = (waypoints[:, :, 2] + math.pi / 2.0).ravel()

        valid_pose = self._poses_valid(px, py, yaw).reshape(n_traj, n_wp)
        z = self._contact_z(px, py, yaw).reshape(n_traj, n_wp, 4)

        z_fl, z_fr, z_rl, z_rr = (z[:, :, 0], z[:, :, 1], z[:, :, 2], z[:, :, 3])
        p = (z_fl + z_fr - z_rl - z_rr) / (2.0 * cfg.wheelbase)
        q = (z_fl - z_fr + z_rl - z_rr) / (2.0 * cfg.wheel_track)
        r = 0.25 * (z_fl + z_fr + z_rl + z_rr)

        tilt_evt = np.hypot(p, q) > math.tan(cfg.max_tilt)

        z_prev = np.concatenate(
            [np.broadcast_to(self.base_contact_z, (n_traj, 1, 4)), z[:, :-1, :]], axis=1
        )
        step_evt = np.any(np.abs(z - z_prev) > cfg.max_step, axis=2)

        obstacle_evt = self._obstacle_flags(
            px, py, yaw, p.ravel(), q.ravel(), r.ravel()
        ).reshape(n_traj, n_wp)

        # Waypoints at or past the first out-of-bounds placement do not
        # contribute events; such traverses are flagged invalid.
        all_valid = valid_pose.all(axis=1)
        first_bad = np.where(all_valid, n_wp, np.argmin(valid_pose, axis=1))
        ks = np.arange(n_wp)[None, :]
        evaluable = ks < first_bad[:, None]

        results = []
        for t in range(n_traj):
            ev = evaluable[t]
            se = step_evt[t] & ev
            oe = obstacle_evt[t] & ev
            te = tilt_evt[t] & ev
            s_any, o_any, t_any = bool(se.any()), bool(oe.any()), bool(te.any())
            results.append(
                TraverseResult(
                    label=FailureLabel(step=s_any, obstacle=o_any, tilt=t_any),
                    first_step=_first_or_none(s_any, se.argmax()),
                    first_obstacle=_first_or_none(o_any, oe.argmax()),
                    first_tilt=_first_or_none(t_any, te.argmax()),
                    valid=bool(all_valid[t]),
                )
            )
        return results


def _as_trajectories(items) -> list[Trajectory]:
    out = []
    for item in items:
        if isinstance(item, PrimitiveSpec):
            out.append(discretize(item))
        elif isinstance(item, Trajectory):
            out.append(item)
        else:
            raise TypeError(f"expected PrimitiveSpec or Trajectory, got {type(item)}")
    return out


def simulate(cfg: RobotConfig, emap: ElevationMap, traj) -> TraverseResult:
    """Simulate one trajectory (relative to the map center)."""
    return simulate_all(cfg, emap, [traj])[0]


def simulate_all(cfg: RobotConfig, emap: ElevationMap, trajectories,
                 workers: int = 1) -> list[TraverseResult]:
    """Simulate a trajectory library; results follow input order.

    ``workers`` threads split the library into contiguous chunks; every
    pose is evaluated independently, so results are identical for any
    worker count.
    """
    trajs = _as_trajectories(trajectories)
    if not trajs:
        return []
    ctx = _BatchContext(cfg, emap)

    # Batch uniform-length groups together, preserving original indices.
    counts = np.array([t.waypoints.shape[0] for t in trajs])
    results: list[TraverseResult | None] = [None] * len(trajs)

    for count in np.unique(counts):
        idx = np.nonzero(counts == count)[0]
        stack = np.stack([trajs[i].waypoints for i in idx])
        if workers <= 1 or len(idx) < 2 * workers:
            group = ctx.run(stack)
        else:
            chunks = np.array_split(np.arange(len(idx)), workers)
            group = [None] * len(idx)
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futs = [pool.submit(ctx.run, stack[ch]) for ch in chunks if ch.size]
                pos = 0
                for ch, fut in zip([c for c in chunks if c.size], futs):
                    for off, res in enumerate(fut.result()):
                        group[ch[0] + off] = res
        for local, res in zip(idx, group):
            results[local] = res
    return results


# -- label CSV ---------------------------------------------------------------

LABEL_HEADER = ["map_id", "traj_id", "step", "obstacle", "tilt", "valid"]


def write_labels_csv(path, rows) -> None:
    """Write (map_id, traj_id, TraverseResult) rows as a labels CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LABEL_HEADER)
        for map_id, traj_id, res in rows:
            writer.writerow([
                map_id, traj_id,
                int(res.label.step), int(res.label.obstacle), int(res.label.tilt),
                int(res.valid),
            ])


def read_labels_csv(path):
    """Read a labels CSV into {(map_id, traj_id): (step, obstacle, tilt, valid)}."""
    out = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != LABEL_HEADER:
            raise ValueError(f"unexpected labels header {header!r}")
        for row in reader:
            key = (int(row[0]), int(row[1]))
            out[key] = (bool(int(row[2])), bool(int(row[3])), bool(int(row[4])),
                        bool(int(row[5])))
    return out
