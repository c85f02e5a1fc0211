import struct

import numpy as np
import pytest

SIDE = 129
CHANNELS = 3


def pack_shard(samples):
    """Assemble SBT v1 bytes from (map_id, traj_id, labels, tensor) tuples."""
    out = [struct.pack("<4sIHH", b"SBT1", len(samples), SIDE, CHANNELS)]
    for map_id, traj_id, labels, tensor in samples:
        step, obstacle, tilt = labels
        out.append(struct.pack("<IIBBBB", map_id, traj_id,
                               int(step), int(obstacle), int(tilt), 0))
        out.append(np.asarray(tensor, dtype="<f4").tobytes(order="C"))
    return b"".join(out)


def synthetic_samples(n, seed=0, signal=0.8):
    """Learnable toy set: each positive event paints its own bright patch.

    step lights rows 20:40, obstacle rows 60:80, tilt rows 100:120 of
    channel 0, so a small CNN can separate the labels quickly.
    """
    rng = np.random.default_rng(seed)
    samples = []
    bands = {0: (20, 40), 1: (60, 80), 2: (100, 120)}
    for i in range(n):
        labels = tuple(bool(b) for b in rng.random(3) < 0.5)
        tensor = rng.random((CHANNELS, SIDE, SIDE)).astype(np.float32) * 0.2
        for event, flag in enumerate(labels):
            lo, hi = bands[event]
            if flag:
                tensor[0, lo:hi, :] += signal
        samples.append((i // 50, i % 50, labels, np.clip(tensor, 0, 1)))
    return samples


@pytest.fixture
def shard_file(tmp_path):
    def write(samples, name="test.sbt"):
        path = tmp_path / name
        path.write_bytes(pack_shard(samples))
        return path

    return write
