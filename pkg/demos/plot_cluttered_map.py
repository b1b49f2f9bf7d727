"""
Twenty obstacles
================

A static map with twenty convex obstacles on a jittered lattice. Every gap is
wider than two and a half inflation radii, so a point-sized planner working on
the inflated map always has a corridor; the question is whether greedy
section-by-section planning finds it.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from timedist import inflate, load_scenario, run
from timedist.oracle import grid_astar

HERE = Path(__file__).parent
OUT = HERE / "out"
OUT.mkdir(exist_ok=True)

scenario = load_scenario(HERE / "scenes" / "cluttered.yaml")
r = scenario.vehicle.circumradius

log = run(scenario)
astar = grid_astar(scenario, cell=scenario.vehicle.width / 4)
print(f"{log.outcome}: tracked {log.path_length:.3f} m, grid A* {astar.length:.3f} m, {len(log.replans)} replans")

fig, ax = plt.subplots(figsize=(8, 6))
for ob in scenario.obstacles:
    ax.fill(*inflate(ob, r).array.T, color="0.85")
    ax.fill(*ob.array.T, color="0.4")
for replan in log.replans[::10]:
    ax.plot(*replan.global_path().T, color="orange", lw=0.6, alpha=0.7)
ax.plot(*astar.path.T, "k:", label="grid A*")
ax.plot(*np.array(log.poses)[:, :2].T, "b-", label="TD static")
ax.plot(*scenario.goal, "g*", ms=12)
ax.set_aspect("equal")
ax.legend(loc="lower right")
fig.savefig(OUT / "cluttered.png", dpi=120)
