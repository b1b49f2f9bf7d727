"""
Crossing traffic and the lateral speed limit
============================================

A car at 20 cm/s meets a box crossing its route from the right and a second
one drifting toward it. The simulator replans every tenth of the look-ahead,
smooths each plan with a quintic and slows down wherever the curve is tighter
than the minimum turning radius ``v_max^2 / a_n_max``.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from timedist import load_scenario, predict_ttc, relativize, rho_min, run
from timedist.render import log_svg

HERE = Path(__file__).parent
OUT = HERE / "out"
OUT.mkdir(exist_ok=True)

scenario = load_scenario(HERE / "scenes" / "crossing.yaml")
car = scenario.vehicle

# %%
# Before moving: if nothing changed course, when would something hit us?
report = predict_ttc(relativize(scenario))
print(f"time to collision at the start: {report.ttc:.2f} s, per obstacle {report.per_obstacle}")
print(f"minimum turning radius: {rho_min(car.v_max, car.a_n_max) * 100:.1f} cm")

# %%
# Run the loop. Every pose is audited against the true obstacle polygons.
log = run(scenario)
print(f"{log.outcome}: {log.path_length:.3f} m in {log.duration:.2f} s, "
      f"{len(log.replans)} replans, {log.collisions} collisions")
(OUT / "crossing.svg").write_text(log_svg(scenario, log))

t = np.array(log.times)
v = np.array(log.speeds)
k = np.abs(np.array(log.curvatures))
cap = np.sqrt(car.a_n_max / np.maximum(k, 1e-12))

fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(8, 7))
xy = np.array(log.poses)[:, :2]
ax0.plot(*xy.T, "b-", label="vehicle")
anchors = np.array(log.obstacle_positions)
for j, ob in enumerate(scenario.obstacles):
    ax0.plot(*anchors[:, j].T, "--", color="0.5")
    ax0.fill(*ob.array.T, color="0.7")
ax0.set_aspect("equal")
ax0.set_title("track (obstacles drawn at their start)")
ax1.plot(t, v * 100, label="speed")
ax1.plot(t, np.minimum(cap, car.v_max) * 100, "r:", label="lateral-acceleration cap")
ax1.set_xlabel("t [s]")
ax1.set_ylabel("cm/s")
ax1.legend()
fig.tight_layout()
fig.savefig(OUT / "crossing.png", dpi=120)
