"""Bit-exact file formats: EMAP elevation maps, SBT sample shards, text grids.

EMAP v1 (little-endian throughout):
    magic ``EMAP`` | u16 version=1 | u16 side_cells | f32 cell_size |
    f64 origin_x | f64 origin_y | side_cells^2 f32 elevations, row-major.

SBT v1 (sample-batch tensors, little-endian):
    magic ``SBT1`` | u32 sample_count | u16 side=129 | u16 channels=3 |
    per sample: u32 map_id | u32 traj_id | u8 step | u8 obstacle |
    u8 tilt | u8 pad | side*side*channels f32, channel-major.

Text grids are one row per line, space-separated decimals; they carry no
geometry, so cell size and origin are supplied on import.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .terrain import ElevationMap


class ParseError(ValueError):
    """File contents do not match the expected format."""


EMAP_MAGIC = b"EMAP"
EMAP_VERSION = 1
_EMAP_HEADER = struct.Struct("<4sHHfdd")

SBT_MAGIC = b"SBT1"
SBT_SIDE = 129
SBT_CHANNELS = 3
_SBT_HEADER = struct.Struct("<4sIHH")
_SBT_SAMPLE_META = struct.Struct("<IIBBBB")


def write_emap(emap: ElevationMap, path) -> None:
    """Serialize an elevation map (cells stored as f32)."""
    header = _EMAP_HEADER.pack(
        EMAP_MAGIC, EMAP_VERSION, emap.side_cells,
        np.float32(emap.cell_size), emap.origin[0], emap.origin[1],
    )
    body = emap.cells.astype("<f4").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)


def read_emap(path) -> ElevationMap:
    """Parse an EMAP v1 file."""
    data = Path(path).read_bytes()
    if len(data) < _EMAP_HEADER.size:
        raise ParseError(f"{path}: truncated header")
    magic, version, side, cell_size, ox, oy = _EMAP_HEADER.unpack_from(data)
    if magic != EMAP_MAGIC:
        raise ParseError(f"{path}: bad magic {magic!r}")
    if version != EMAP_VERSION:
        raise ParseError(f"{path}: unsupported version {version}")
    expected = _EMAP_HEADER.size + side * side * 4
    if len(data) != expected:
        raise ParseError(f"{path}: expected {expected} bytes, found {len(data)}")
    cells = np.frombuffer(data, dtype="<f4", offset=_EMAP_HEADER.size).reshape(side, side)
    return ElevationMap(cells, cell_size=float(cell_size), origin=(ox, oy))


def write_text_grid(emap: ElevationMap, path) -> None:
    """Write cells as plain text, one row per line."""
    np.savetxt(path, emap.cells, fmt="%.9g")


def read_text_grid(path, cell_size: float, origin=(0.0, 0.0)) -> np.ndarray:
    """Parse a plain-text grid into a raw cell array (geometry supplied)."""
    try:
        cells = np.loadtxt(path, dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if cells.size == 0:
        raise ParseError(f"{path}: empty grid")
    return cells


# -- SBT shards ---------------------------------------------------------------


class SbtWriter:
    """Streaming SBT v1 writer; sample count is fixed up front.

    Accepts data shaped (129, 129, 3) or (3, 129, 129); (H, W, C) input
    is transposed to the channel-major layout on disk.
    """

    def __init__(self, path, count: int):
        self._fh = open(path, "wb")
        self._expected = int(count)
        self._written = 0
        self._fh.write(_SBT_HEADER.pack(SBT_MAGIC, self._expected, SBT_SIDE, SBT_CHANNELS))

    def add(self, map_id: int, traj_id: int, label, data) -> None:
        arr = np.asarray(data)
        if arr.shape == (SBT_SIDE, SBT_SIDE, SBT_CHANNELS):
            arr = np.moveaxis(arr, 2, 0)
        if arr.shape != (SBT_CHANNELS, SBT_SIDE, SBT_SIDE):
            raise ValueError(
                f"sample shape {arr.shape} is not {SBT_SIDE}x{SBT_SIDE}x{SBT_CHANNELS}"
            )
        step, obstacle, tilt = label
        self._fh.write(_SBT_SAMPLE_META.pack(int(map_id), int(traj_id),
                                             int(bool(step)), int(bool(obstacle)),
                                             int(bool(tilt)), 0))
        self._fh.write(arr.astype("<f4").tobytes(order="C"))
        self._written += 1

    def close(self) -> None:
        self._fh.close()
        if self._written != self._expected:
            raise ValueError(
                f"shard declared {self._expected} samples but received {self._written}"
            )

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()
        return False


def write_sbt(path, samples) -> None:
    """Write an SBT v1 shard from an in-memory sample list.

    ``samples`` is an iterable of (map_id, traj_id, label_triple, data).
    """
    samples = list(samples)
    with SbtWriter(path, len(samples)) as writer:
        for map_id, traj_id, label, data in samples:
            writer.add(map_id, traj_id, label, data)


def read_sbt(path):
    """Read an SBT v1 shard.

    Returns a list of (map_id, traj_id, (step, obstacle, tilt), data)
    with data shaped (3, 129, 129) float32.
    """
    data = Path(path).read_bytes()
    if len(data) < _SBT_HEADER.size:
        raise ParseError(f"{path}: truncated header")
    magic, count, side, channels = _SBT_HEADER.unpack_from(data)
    if magic != SBT_MAGIC:
        raise ParseError(f"{path}: bad magic {magic!r}")
    if side != SBT_SIDE or channels != SBT_CHANNELS:
        raise ParseError(f"{path}: unsupported geometry {side}x{side}x{channels}")
    frame = side * side * channels * 4
    expected = _SBT_HEADER.size + count * (_SBT_SAMPLE_META.size + frame)
    if len(data) != expected:
        raise ParseError(f"{path}: expected {expected} bytes, found {len(data)}")
    out = []
    off = _SBT_HEADER.size
    for _ in range(count):
        map_id, traj_id, step, obstacle, tilt, _pad = _SBT_SAMPLE_META.unpack_from(data, off)
        off += _SBT_SAMPLE_META.size
        arr = np.frombuffer(data, dtype="<f4", count=side * side * channels, offset=off)
        off += frame
        out.append((map_id, traj_id, (bool(step), bool(obstacle), bool(tilt)),
                    arr.reshape(channels, side, side)))
    return out
