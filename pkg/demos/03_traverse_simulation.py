"""Label one rough map with the traverse simulator and render the fan.

The robot is dropped on every trajectory waypoint in turn; step events
compare consecutive wheel elevations, obstacle events test body
clearance over the fitted wheel plane, and tilt events bound the plane's
inclination. Labels latch on first occurrence.

Run:  python demos/03_traverse_simulation.py
"""

import time
from collections import Counter
from pathlib import Path

from traversim.actions import default_action_space, discretize
from traversim.plot import render_fan, write_ppm
from traversim.robot import RobotConfig
from traversim.simulate import simulate_all
from traversim.terrain import generate_map, load_preset

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

cfg = RobotConfig.default()
emap = generate_map(load_preset("mesas", master_seed=104))
trajs = [discretize(s) for s in default_action_space()]

t0 = time.perf_counter()
results = simulate_all(cfg, emap, trajs, workers=2)
print(f"simulated {len(results)} trajectories in {time.perf_counter() - t0:.2f}s")

counts = Counter()
for r in results:
    counts["step"] += r.label.step
    counts["obstacle"] += r.label.obstacle
    counts["tilt"] += r.label.tilt
    counts["safe"] += not r.label.any
print("label counts:", dict(counts))

first_steps = [r.first_step for r in results if r.first_step is not None]
if first_steps:
    print(f"earliest step failure at waypoint {min(first_steps)} "
          f"(waypoints are 6 cm apart)")

# One fan image per event: green = safe, red = failed (binary labels).
for event, bit in (("step", 0), ("obstacle", 1), ("tilt", 2)):
    probs = [float((r.label.step, r.label.obstacle, r.label.tilt)[bit])
             for r in results]
    write_ppm(out_dir / f"fan_{event}.ppm", render_fan(emap, trajs, probs))
print(f"wrote {out_dir}/fan_{{step,obstacle,tilt}}.ppm")
