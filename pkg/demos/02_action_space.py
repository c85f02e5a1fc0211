"""Visualize the 3042-primitive action space.

Every trajectory is a point turn (18 angles) plus two 1.65 m arcs drawn
from 13 curvatures. The fan below shows the no-rotation slice; the full
library is that fan swung through all 18 headings.

Run:  python demos/02_action_space.py
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from traversim.actions import default_action_space, discretize, write_manifest

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

space = default_action_space()
print(f"action space: {len(space)} primitives "
      f"(18 rotations x 13 x 13 curvatures)")

fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(12, 6))
for spec in space:
    if spec.rotation != 0.0:
        continue
    w = discretize(spec).waypoints
    ax0.plot(w[:, 0], w[:, 1], lw=0.4, color="tab:blue", alpha=0.6)
ax0.set_title("no-rotation slice (169 trajectories)")
ax0.set_aspect("equal")
ax0.set_xlabel("x [m]")
ax0.set_ylabel("y [m]")

for spec in space[:: 13]:
    w = discretize(spec).waypoints
    ax1.plot(w[:, 0], w[:, 1], lw=0.3, color="tab:green", alpha=0.4)
ax1.set_title("every 13th primitive across all rotations")
ax1.set_aspect("equal")
ax1.set_xlabel("x [m]")

fig.tight_layout()
fig.savefig(out_dir / "action_space.png", dpi=110)
print(f"wrote {out_dir / 'action_space.png'}")

# Each trajectory is 3.3 m of path discretized at 6 cm.
lengths = np.array([discretize(s).chord_length for s in space[::101]])
print(f"chord lengths: {lengths.min():.6f} .. {lengths.max():.6f} m (target 3.3)")

write_manifest(space, out_dir / "action_manifest.txt")
print(f"wrote {out_dir / 'action_manifest.txt'} (stable trajectory IDs)")
