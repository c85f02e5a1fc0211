"""Action-space fan rendering to portable pixmaps.

Each trajectory polyline is drawn over the map extent, colored by its
failure probability: green below 0.25, yellow from 0.25 through 0.5, red
above 0.5 (both band edges are yellow). Output is binary PPM (P6), so no
plotting library is involved.
"""

from __future__ import annotations

import numpy as np

from .terrain import ElevationMap

GREEN = (40, 170, 40)
YELLOW = (235, 200, 30)
RED = (220, 40, 40)


def write_ppm(path, rgb: np.ndarray) -> None:
    """Write an (H, W, 3) uint8 image as binary PPM."""
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    h, w, c = rgb.shape
    if c != 3:
        raise ValueError("PPM needs 3 channels")
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())


def probability_band(p: float):
    """Color band for one failure probability (edges resolve to yellow)."""
    if p < 0.25:
        return GREEN
    if p <= 0.5:
        return YELLOW
    return RED


def _background(emap: ElevationMap, scale: int) -> np.ndarray:
    lo = emap.cells.min()
    hi = emap.cells.max()
    span = hi - lo if hi > lo else 1.0
    gray = ((emap.cells - lo) / span * 200.0 + 30.0).astype(np.uint8)
    img = np.repeat(np.repeat(gray, scale, axis=0), scale, axis=1)
    return np.stack([img, img, img], axis=2)


def render_fan(emap: ElevationMap, trajectories, probabilities,
               scale: int = 4) -> np.ndarray:
    """Draw trajectory polylines over a hillshade-gray map.

    ``probabilities`` holds one failure probability per trajectory. Safer
    bands are drawn first so dangerous trajectories stay visible on top.
    """
    img = _background(emap, scale)
    h = w = emap.side_cells * scale
    he = emap.half_extent
    extent = emap.extent
    ox, oy = emap.origin

    order = {id(GREEN): 0, id(YELLOW): 1, id(RED): 2}
    drawlist = sorted(
        ((probability_band(float(p)), traj) for traj, p in zip(trajectories, probabilities)),
        key=lambda item: order[id(item[0])],
    )
    for color, traj in drawlist:
        pts = traj.waypoints[:, :2]
        seg = np.diff(pts, axis=0)
        seg_len = np.hypot(seg[:, 0], seg[:, 1])
        n_steps = np.maximum((seg_len / (extent / (w * 2))).astype(int), 1)
        xs = [np.linspace(pts[i, 0], pts[i + 1, 0], n_steps[i]) for i in range(len(seg))]
        ys = [np.linspace(pts[i, 1], pts[i + 1, 1], n_steps[i]) for i in range(len(seg))]
        x = np.concatenate(xs) + ox
        y = np.concatenate(ys) + oy
        col = np.clip(((x - ox + he) / extent * (w - 1)).round().astype(int), 0, w - 1)
        row = np.clip(((he - (y - oy)) / extent * (h - 1)).round().astype(int), 0, h - 1)
        img[row, col] = color
    return img
