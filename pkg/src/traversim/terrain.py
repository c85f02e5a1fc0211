"""Procedural elevation maps from blended gradient-noise fields.

A map is synthesized per cell from three seeded noise fields: a mountain
field m, a smoothed plain field p, and a weight field w that interpolates
between them,

    m = noise_m(x * alpha_m, y * alpha_m) * beta_m + gamma_m
    p = (noise_p(x * alpha_p, y * alpha_p) * beta_p + gamma_p) ** delta
    w = intrp(noise_w(x * alpha_w, y * alpha_w) * beta_w + gamma_w, u, d)
    Z = p * w + m * (1 - w)

Noise inputs are world meters, so changing the grid resolution never
changes the terrain shape. Named parameter presets live in plain-text
config files (see ``load_preset``); they are starting points, not
calibrated ground truth.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .noise import NoiseSource


class InvalidParams(ValueError):
    """Terrain parameters violate their domain constraints."""


class NegativeBase(ValueError):
    """Plain-field base went negative with clamping disabled."""


class OutOfBounds(ValueError):
    """Query point lies outside the map extent."""


def intrp(v, u, d):
    """Threshold interpolation: 1 above ``u``, 0 below ``d``, linear between.

    Requires d < u. Works elementwise on arrays.
    """
    if not d < u:
        raise InvalidParams(f"intrp thresholds need d < u, got d={d}, u={u}")
    v = np.asarray(v, dtype=np.float64)
    out = np.clip((v - d) / (u - d), 0.0, 1.0)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class TerrainParams:
    """Full parameter set for one generated map.

    alpha/beta/gamma triplets are frequency/scale/offset of the mountain
    (m), plain (p) and weight (w) noise fields; ``delta`` in [0, 1] is the
    plain smoothing exponent; ``u``/``d`` (d < u) are the weight-field
    interpolation thresholds; the three seeds decorrelate the fields.
    """

    alpha_m: float
    beta_m: float
    gamma_m: float
    alpha_p: float
    beta_p: float
    gamma_p: float
    delta: float
    alpha_w: float
    beta_w: float
    gamma_w: float
    u: float
    d: float
    seed_m: int = 0
    seed_p: int = 1
    seed_w: int = 2

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise InvalidParams(f"delta must be in [0, 1], got {self.delta}")
        if not self.d < self.u:
            raise InvalidParams(f"thresholds need d < u, got d={self.d}, u={self.u}")
        for name in ("beta_m", "beta_p", "beta_w"):
            if getattr(self, name) < 0:
                raise InvalidParams(f"{name} must be nonnegative")

    def with_seeds(self, master_seed: int, shared: bool = False) -> "TerrainParams":
        """Derive field seeds from a master seed.

        Default gives the three fields independent seeds at fixed offsets
        (+0, +1, +2); ``shared=True`` reuses one seed for all fields.
        """
        s = int(master_seed)
        if shared:
            seeds = (s, s, s)
        else:
            seeds = (s, s + 1, s + 2)
        return TerrainParams(
            alpha_m=self.alpha_m, beta_m=self.beta_m, gamma_m=self.gamma_m,
            alpha_p=self.alpha_p, beta_p=self.beta_p, gamma_p=self.gamma_p,
            delta=self.delta,
            alpha_w=self.alpha_w, beta_w=self.beta_w, gamma_w=self.gamma_w,
            u=self.u, d=self.d,
            seed_m=seeds[0], seed_p=seeds[1], seed_w=seeds[2],
        )


DEFAULT_SIDE_CELLS = 129
DEFAULT_CELL_SIZE = 0.0625  # 8 m extent / 128 intervals


class ElevationMap:
    """Uniform square grid of terrain elevations with world-frame geometry.

    ``cells[r, c]`` holds the elevation at world point
    ``x = origin_x + (c - (side - 1)/2) * cell_size``,
    ``y = origin_y + ((side - 1)/2 - r) * cell_size``
    (row 0 is the +y edge, matching image orientation). Extent is
    ``(side_cells - 1) * cell_size`` across, centered on ``origin``.
    """

    __slots__ = ("cells", "side_cells", "cell_size", "origin")

    def __init__(self, cells, cell_size=DEFAULT_CELL_SIZE, origin=(0.0, 0.0)):
        cells = np.asarray(cells, dtype=np.float64)
        if cells.ndim != 2 or cells.shape[0] != cells.shape[1]:
            raise ValueError(f"cells must be a square 2D grid, got shape {cells.shape}")
        if not np.all(np.isfinite(cells)):
            raise ValueError("elevations must all be finite")
        self.cells = cells
        self.side_cells = cells.shape[0]
        self.cell_size = float(cell_size)
        self.origin = (float(origin[0]), float(origin[1]))

    @property
    def extent(self) -> float:
        """World size of one side, in meters."""
        return (self.side_cells - 1) * self.cell_size

    @property
    def half_extent(self) -> float:
        return 0.5 * self.extent

    def world_x(self) -> np.ndarray:
        """Cell-center x coordinates, one per column."""
        half = (self.side_cells - 1) / 2.0
        return self.origin[0] + (np.arange(self.side_cells) - half) * self.cell_size

    def world_y(self) -> np.ndarray:
        """Cell-center y coordinates, one per row (descending)."""
        half = (self.side_cells - 1) / 2.0
        return self.origin[1] + (half - np.arange(self.side_cells)) * self.cell_size

    def inside(self, x, y):
        """Elementwise test that (x, y) lies within the map extent."""
        hx = self.half_extent
        return (
            (np.abs(np.asarray(x, dtype=np.float64) - self.origin[0]) <= hx)
            & (np.abs(np.asarray(y, dtype=np.float64) - self.origin[1]) <= hx)
        )

    def _col_row(self, x, y):
        half = (self.side_cells - 1) / 2.0
        col = (np.asarray(x, dtype=np.float64) - self.origin[0]) / self.cell_size + half
        row = half - (np.asarray(y, dtype=np.float64) - self.origin[1]) / self.cell_size
        return col, row

    def _bilinear(self, x, y):
        """Bilinear sample without bounds checks (indices are clipped)."""
        col, row = self._col_row(x, y)
        n = self.side_cells
        j0 = np.clip(np.floor(col).astype(np.intp), 0, n - 2)
        i0 = np.clip(np.floor(row).astype(np.intp), 0, n - 2)
        fx = col - j0
        fy = row - i0
        c = self.cells
        z00 = c[i0, j0]
        z01 = c[i0, j0 + 1]
        z10 = c[i0 + 1, j0]
        z11 = c[i0 + 1, j0 + 1]
        top = z00 * (1.0 - fx) + z01 * fx
        bot = z10 * (1.0 - fx) + z11 * fx
        return top * (1.0 - fy) + bot * fy

    def elevation_at(self, x, y):
        """Bilinearly interpolated elevation at world (x, y).

        Exact cell-center queries return the stored value. Raises
        OutOfBounds if any query point is outside the extent.
        """
        ok = self.inside(x, y)
        if not np.all(ok):
            raise OutOfBounds(f"query outside map extent (half extent {self.half_extent} m)")
        out = self._bilinear(x, y)
        if np.ndim(x) == 0 and np.ndim(y) == 0:
            return float(out)
        return out


def generate_map(
    params: TerrainParams,
    side_cells: int = DEFAULT_SIDE_CELLS,
    cell_size: float = DEFAULT_CELL_SIZE,
    origin=(0.0, 0.0),
    clamp_negative_base: bool = True,
) -> ElevationMap:
    """Synthesize one elevation map from the three-field composition.

    The plain field raises its base to a fractional power, so a negative
    base is clamped to 0 first; pass ``clamp_negative_base=False`` to get
    a NegativeBase error instead. Deterministic in (params, dims, origin).
    """
    if side_cells < 2:
        raise InvalidParams("side_cells must be at least 2")
    if cell_size <= 0:
        raise InvalidParams("cell_size must be positive")

    half = (side_cells - 1) / 2.0
    xs = origin[0] + (np.arange(side_cells) - half) * cell_size
    ys = origin[1] + (half - np.arange(side_cells)) * cell_size
    xx, yy = np.meshgrid(xs, ys)

    noise_m = NoiseSource(params.seed_m)
    noise_p = NoiseSource(params.seed_p)
    noise_w = NoiseSource(params.seed_w)

    m = noise_m.noise2d(xx * params.alpha_m, yy * params.alpha_m) * params.beta_m + params.gamma_m
    base = noise_p.noise2d(xx * params.alpha_p, yy * params.alpha_p) * params.beta_p + params.gamma_p
    if clamp_negative_base:
        base = np.maximum(base, 0.0)
    elif np.any(base < 0):
        raise NegativeBase("plain-field base is negative; enable clamping or adjust beta_p/gamma_p")
    p = np.power(base, params.delta)
    w = intrp(
        noise_w.noise2d(xx * params.alpha_w, yy * params.alpha_w) * params.beta_w + params.gamma_w,
        params.u,
        params.d,
    )
    z = p * w + m * (1.0 - w)

    # Per-run sanity: the blend must stay between its two source fields.
    assert np.all((w >= 0.0) & (w <= 1.0))
    lo = np.minimum(m, p)
    hi = np.maximum(m, p)
    slack = 1e-9 * (1.0 + np.abs(hi))
    assert np.all(z >= lo - slack) and np.all(z <= hi + slack)

    return ElevationMap(z, cell_size=cell_size, origin=origin)


# -- presets ----------------------------------------------------------------

_PRESET_DIR_ENV = "TRAVERSE_SIM_PRESETS"
_BUILTIN_PRESET_DIR = Path(__file__).parent / "presets"

_PRESET_FIELDS = (
    "alpha_m", "beta_m", "gamma_m",
    "alpha_p", "beta_p", "gamma_p",
    "delta",
    "alpha_w", "beta_w", "gamma_w",
    "u", "d",
)


def preset_dir(override=None) -> Path:
    """Resolve the preset directory: explicit arg, env var, or built-in."""
    if override is not None:
        return Path(override)
    env = os.environ.get(_PRESET_DIR_ENV)
    if env:
        return Path(env)
    return _BUILTIN_PRESET_DIR


def list_presets(directory=None) -> list[str]:
    """Names of all presets available in the preset directory."""
    d = preset_dir(directory)
    if not d.is_dir():
        return []
    return sorted(p.stem for p in d.glob("*.cfg"))


def _parse_kv_file(path: Path) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()
    return values


def load_preset(name: str, master_seed: int = 0, directory=None) -> TerrainParams:
    """Load a named preset and bind its noise seeds from ``master_seed``."""
    d = preset_dir(directory)
    path = d / f"{name}.cfg"
    if not path.is_file():
        known = ", ".join(list_presets(directory)) or "(none)"
        raise FileNotFoundError(f"unknown preset {name!r}; available: {known}")
    raw = _parse_kv_file(path)
    missing = [f for f in _PRESET_FIELDS if f not in raw]
    if missing:
        raise InvalidParams(f"preset {name!r} is missing fields: {', '.join(missing)}")
    kwargs = {f: float(raw[f]) for f in _PRESET_FIELDS}
    shared = raw.get("shared_seed", "false").lower() in ("1", "true", "yes")
    base = TerrainParams(**kwargs)
    return base.with_seeds(master_seed, shared=shared)
