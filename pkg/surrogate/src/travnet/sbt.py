"""Reader for SBT v1 sample shards.

Wire format (little-endian):
    magic ``SBT1`` | u32 sample_count | u16 side=129 | u16 channels=3 |
    per sample: u32 map_id | u32 traj_id | u8 step | u8 obstacle |
    u8 tilt | u8 pad | side*side*channels f32, channel-major.

This module is self-contained on purpose: the trainer talks to the data
pipeline only through files, never through its code.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SIDE = 129
CHANNELS = 3

_HEADER = struct.Struct("<4sIHH")
_META = struct.Struct("<IIBBBB")
_FRAME_BYTES = SIDE * SIDE * CHANNELS * 4


class FormatError(ValueError):
    """Shard bytes do not parse as SBT v1."""


class ShapeError(ValueError):
    """Shard geometry is not 129 x 129 x 3."""


@dataclass(frozen=True)
class SampleMeta:
    map_id: int
    traj_id: int
    labels: np.ndarray  # (3,) float32: step, obstacle, tilt


class ShardIndex:
    """Random-access index over one or more shard files.

    Holds only metadata in memory; tensors are read on demand so large
    datasets never have to fit in RAM at once.
    """

    def __init__(self, paths):
        self.paths = [Path(p) for p in paths]
        self._meta: list[SampleMeta] = []
        self._loc: list[tuple[int, int]] = []  # (file index, byte offset)
        for fi, path in enumerate(self.paths):
            with open(path, "rb") as fh:
                head = fh.read(_HEADER.size)
                if len(head) < _HEADER.size:
                    raise FormatError(f"{path}: truncated header")
                magic, count, side, channels = _HEADER.unpack(head)
                if magic != b"SBT1":
                    raise FormatError(f"{path}: bad magic {magic!r}")
                if side != SIDE or channels != CHANNELS:
                    raise ShapeError(
                        f"{path}: geometry {side}x{side}x{channels}, "
                        f"expected {SIDE}x{SIDE}x{CHANNELS}"
                    )
                expected = _HEADER.size + count * (_META.size + _FRAME_BYTES)
                if path.stat().st_size != expected:
                    raise FormatError(
                        f"{path}: size {path.stat().st_size}, expected {expected}"
                    )
                offset = _HEADER.size
                for _ in range(count):
                    fh.seek(offset)
                    meta = fh.read(_META.size)
                    map_id, traj_id, step, obstacle, tilt, _ = _META.unpack(meta)
                    self._meta.append(SampleMeta(
                        map_id=map_id, traj_id=traj_id,
                        labels=np.array([step, obstacle, tilt], dtype=np.float32),
                    ))
                    self._loc.append((fi, offset + _META.size))
                    offset += _META.size + _FRAME_BYTES
        self._handles: list = [None] * len(self.paths)

    def __len__(self) -> int:
        return len(self._meta)

    def meta(self, i: int) -> SampleMeta:
        return self._meta[i]

    @property
    def labels(self) -> np.ndarray:
        """All labels, shape (n, 3) float32."""
        return np.stack([m.labels for m in self._meta]) if self._meta else \
            np.zeros((0, 3), dtype=np.float32)

    def keys(self):
        return [(m.map_id, m.traj_id) for m in self._meta]

    def tensor(self, i: int) -> np.ndarray:
        """One sample tensor, shape (3, 129, 129) float32."""
        fi, offset = self._loc[i]
        if self._handles[fi] is None:
            self._handles[fi] = open(self.paths[fi], "rb")
        fh = self._handles[fi]
        fh.seek(offset)
        buf = fh.read(_FRAME_BYTES)
        return np.frombuffer(buf, dtype="<f4").reshape(CHANNELS, SIDE, SIDE)

    def batch(self, indices) -> tuple[np.ndarray, np.ndarray]:
        """Stacked (tensors, labels) for the given sample indices."""
        x = np.stack([self.tensor(i) for i in indices])
        y = np.stack([self._meta[i].labels for i in indices])
        return x, y

    def close(self) -> None:
        for fh in self._handles:
            if fh is not None:
                fh.close()
        self._handles = [None] * len(self.paths)
