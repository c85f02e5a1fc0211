"""Inference over shards and the prediction/label CSV emitters.

The prediction CSV (``map_id,traj_id,p_step,p_obstacle,p_tilt``) and the
labels CSV (``map_id,traj_id,step,obstacle,tilt,valid``) are the wire
formats the scoring pipeline consumes.
"""

from __future__ import annotations

import csv

import numpy as np
import torch

from .model import SurrogateNet
from .sbt import ShardIndex

PREDICTION_HEADER = ["map_id", "traj_id", "p_step", "p_obstacle", "p_tilt"]
LABELS_HEADER = ["map_id", "traj_id", "step", "obstacle", "tilt", "valid"]


def predict(model: SurrogateNet, shard_paths, batch_size: int = 64,
            device: str = "cpu"):
    """Failure probabilities for every shard sample.

    Returns {(map_id, traj_id): (p_step, p_obstacle, p_tilt)}; evaluation
    is stateless, so shard order never changes a sample's row.
    """
    index = ShardIndex(shard_paths)
    model.eval()
    out = {}
    with torch.no_grad():
        for lo in range(0, len(index), batch_size):
            idx = np.arange(lo, min(lo + batch_size, len(index)))
            x, _ = index.batch(idx)
            probs = model(torch.from_numpy(x).to(device)).cpu().numpy()
            for row, i in zip(probs, idx):
                meta = index.meta(i)
                out[(meta.map_id, meta.traj_id)] = tuple(float(p) for p in row)
    index.close()
    return out


def write_predictions_csv(path, predictions) -> None:
    """Write predictions sorted by key; probabilities at full precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PREDICTION_HEADER)
        for (map_id, traj_id) in sorted(predictions):
            probs = predictions[(map_id, traj_id)]
            writer.writerow([map_id, traj_id, *[repr(p) for p in probs]])


def labels_csv_from_shards(path, shard_paths) -> None:
    """Extract the ground-truth labels carried by shards into a labels CSV.

    Shards only hold exported (valid) samples, so every row is valid=1.
    """
    index = ShardIndex(shard_paths)
    rows = {}
    for i in range(len(index)):
        meta = index.meta(i)
        rows[(meta.map_id, meta.traj_id)] = meta.labels.astype(int)
    index.close()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LABELS_HEADER)
        for (map_id, traj_id) in sorted(rows):
            step, obstacle, tilt = rows[(map_id, traj_id)]
            writer.writerow([map_id, traj_id, step, obstacle, tilt, 1])
