"""Render the three input channels for a few (map, trajectory) pairs.

Each exported sample is a 129 x 129 x 3 tensor: normalized elevation,
trajectory-centerline falloff, and the wheel-trace field in which ground
crossed by both front and rear wheels saturates to 1.

Run:  python demos/04_rasterization.py
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from traversim.actions import default_action_space, discretize
from traversim.raster import rasterize
from traversim.robot import RobotConfig
from traversim.terrain import generate_map, load_preset

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

cfg = RobotConfig.default()
emap = generate_map(load_preset("boulders", master_seed=31))
space = default_action_space()

picks = [84, 1521, 2960]  # straight-ish, mid-fan, hard-turning
fig, axes = plt.subplots(len(picks), 3, figsize=(10.5, 3.4 * len(picks)))
for row, idx in enumerate(picks):
    spec = space[idx]
    sample = rasterize(cfg, emap, discretize(spec), traj_id=idx)
    titles = ("elevation (0.5 = start height)", "trajectory centerline",
              "wheel trace")
    for col in range(3):
        ax = axes[row, col]
        ax.imshow(sample.data[:, :, col], cmap="viridis", vmin=0, vmax=1,
                  extent=(-4, 4, -4, 4))
        if row == 0:
            ax.set_title(titles[col])
        if col == 0:
            ax.set_ylabel(f"traj {idx}")
    lo, hi = sample.data.min(), sample.data.max()
    assert 0.0 <= lo and hi <= 1.0
    print(f"traj {idx}: channel range [{lo:.3f}, {hi:.3f}]")

fig.tight_layout()
fig.savefig(out_dir / "raster_channels.png", dpi=110)
print(f"wrote {out_dir / 'raster_channels.png'}")
