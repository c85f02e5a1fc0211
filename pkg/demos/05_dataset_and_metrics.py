"""End-to-end mini dataset build plus a metrics round trip.

Builds a small balanced dataset (maps -> simulation -> split by map ->
safe subsampling -> SBT shards), then scores a deliberately blurred
copy of the ground truth with the metrics engine to show the report
format, including micro-pooled overall rates.

Run:  python demos/05_dataset_and_metrics.py
"""

import tempfile
from pathlib import Path

import numpy as np

from traversim.dataset import build_dataset
from traversim.formats import read_sbt
from traversim.metrics import evaluate_predictions, render_report
from traversim.simulate import read_labels_csv

work = Path(tempfile.mkdtemp(prefix="traversim_demo_"))
print(f"building a 12-map dataset under {work} ...")
manifest = build_dataset(work, n_maps=12, trajs_per_map=120, seed=5,
                         min_safe_floor=50, workers=2)

pop = manifest.population
print(f"population: {pop['safe']} safe / {pop['failure']} failure")
for split, c in manifest.split_counts.items():
    print(f"  {split}: {c['samples']} samples ({c['failure']} failure)")

first_shard = manifest.shards[0][0]
samples = read_sbt(work / "shards" / first_shard)
print(f"{first_shard}: {len(samples)} samples, tensor shape "
      f"{samples[0][3].shape}, dtype {samples[0][3].dtype}")

# A noisy oracle: correct labels pushed through a soft probability and
# 10% simulated mistakes.
labels = read_labels_csv(work / "labels.csv")
rng = np.random.default_rng(0)
predictions = {}
for key, (step, obstacle, tilt, valid) in labels.items():
    if not valid:
        continue
    probs = []
    for bit in (step, obstacle, tilt):
        p = 0.85 if bit else 0.1
        if rng.random() < 0.10:
            p = 1.0 - p
        probs.append(p)
    predictions[key] = tuple(probs)

cms, per_event, pooled = evaluate_predictions(predictions, labels)
print()
print(render_report(cms, per_event, pooled))
