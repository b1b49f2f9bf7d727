import csv
import json
import math

import numpy as np
import pytest

from timedist.cli import main
from timedist.simulator import log_from_dict
from scenes import TWO_RECTANGLES as TWO_RECTS

HEAD_ON = """
vehicle: {length: 1.0, width: 0.6, speed: 0.0, v_max: 1.0, a_n_max: 1.0}
goal: [9, 0]
obstacles:
  - {id: oncoming, vertices: [[5, -0.5], [6, -0.5], [6, 0.5], [5, 0.5]], velocity: {vx: -1, vy: 0}}
"""

EMPTY = """
vehicle: {length: 0.1, width: 0.08, pose: {x: 0.1, y: 0.2, heading: 0.4}, v_max: 0.015, a_n_max: 0.0133}
goal: [0.6, 0.5]
"""


def scenario_file(tmp_path, text, name="scene.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def test_predict_head_on(tmp_path, capsys):
    src = scenario_file(tmp_path, HEAD_ON)
    assert main(["predict", str(src), "--out", str(tmp_path / "out")]) == 0
    data = json.loads((tmp_path / "out" / "scene_ttc.json").read_text())
    assert data["collision_predicted"]
    assert data["ttc"] == pytest.approx(4.5, abs=1e-9)
    assert data["per_obstacle"]["oncoming"] == pytest.approx(4.5, abs=1e-9)
    assert "ttc 4.5 s" in capsys.readouterr().out


def test_plan_empty_world_on_goal_line(tmp_path):
    src = scenario_file(tmp_path, EMPTY)
    out = tmp_path / "out"
    assert main(["plan", str(src), "--out", str(out), "--field-dump"]) == 0
    rows = read_csv(out / "scene_path.csv")
    assert list(rows[0]) == ["t", "x", "y", "heading", "v", "T_p"]
    xy = np.array([[float(r["x"]), float(r["y"])] for r in rows])
    start, goal = np.array([0.1, 0.2]), np.array([0.6, 0.5])
    u = (goal - start) / np.linalg.norm(goal - start)
    d = xy - start
    assert np.all(np.abs(d[:, 0] * u[1] - d[:, 1] * u[0]) < 1e-9)
    np.testing.assert_allclose(xy[-1], goal, atol=1e-12)
    assert rows[0]["T_p"] == "" and all(float(r["T_p"]) > 0 for r in rows[1:])
    field = read_csv(out / "scene_field.csv")
    assert list(field[0]) == ["x_vehicle", "y_vehicle", "x", "y", "value"]
    assert all(math.isfinite(float(r["value"])) for r in field)
    assert (out / "scene_plan.svg").read_text().startswith("<svg")


def test_compare_two_rectangles(tmp_path):
    src = scenario_file(tmp_path, TWO_RECTS, "rects.yaml")
    assert main(["compare", str(src), "--out", str(tmp_path)]) == 0
    rows = {r["method"]: r for r in read_csv(tmp_path / "rects_compare.csv")}
    assert set(rows) == {"grid_astar", "td_static", "td_dynamic"}
    static = float(rows["td_static"]["length"])
    dynamic = float(rows["td_dynamic"]["length"])
    assert rows["td_static"]["outcome"] == "goal-reached"
    assert float(rows["td_static"]["ratio"]) <= 1.10
    assert dynamic <= 1.05 * static


def test_simulate_and_render_from_log(tmp_path):
    src = scenario_file(tmp_path, TWO_RECTS, "rects.yaml")
    out = tmp_path / "out"
    assert main(["simulate", str(src), "--out", str(out)]) == 0
    saved = json.loads((out / "rects_log.json").read_text())
    sim_log = log_from_dict(saved["log"])
    assert sim_log.outcome == "goal-reached" and sim_log.collisions == 0
    traj = read_csv(out / "rects_trajectory.csv")
    assert len(traj) == len(sim_log.times)
    assert main(["render", str(out / "rects_log.json"), "--out", str(tmp_path / "pics")]) == 0
    svg = (tmp_path / "pics" / "rects.svg").read_text()
    assert svg == (out / "rects_simulate.svg").read_text()
    assert main(["render", str(src), "--out", str(tmp_path / "pics")]) == 0


def test_outputs_are_byte_identical(tmp_path):
    src = scenario_file(tmp_path, TWO_RECTS, "rects.yaml")
    for run in ("a", "b"):
        for cmd in ("predict", "plan", "simulate"):
            assert main([cmd, str(src), "--out", str(tmp_path / run), "--field-dump", "--seed", "7"]) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir()) and len(names) == 7
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


@pytest.mark.parametrize("text, command, code", [
    ("vehicle: {length: 0.1}\n", "plan", 2),
    (EMPTY + "colour: red\n", "predict", 2),
    (EMPTY + "obstacles:\n  - {kind: circle, center: [0.3, 0.3], radius: 0.05}\nplanner: {mode: dynamic}\n", "plan", 2),
    (EMPTY + "planner: {alpha: 1.0001, beta: 0.9, gamma: 0.9}\n", "plan", 2),
    (EMPTY.replace("[0.6, 0.5]", "[-0.6, -0.5]"), "plan", 3),
    (EMPTY + "obstacles:\n  - {id: under, vertices: [[0.09, 0.19], [0.11, 0.19], [0.11, 0.21], [0.09, 0.21]]}\n",
     "simulate", 4),
])
def test_exit_codes(tmp_path, text, command, code):
    src = scenario_file(tmp_path, text)
    assert main([command, str(src), "--out", str(tmp_path / "out")]) == code


def test_mode_override_and_guards(tmp_path):
    circles = EMPTY + "obstacles:\n  - {kind: circle, center: [0.35, 0.3], radius: 0.03}\n"
    src = scenario_file(tmp_path, circles)
    assert main(["plan", str(src), "--mode", "dynamic", "--out", str(tmp_path)]) == 2
    src = scenario_file(tmp_path, circles + "planner: {approximate_circles: 12}\n")
    assert main(["plan", str(src), "--mode", "dynamic", "--out", str(tmp_path)]) == 0
    assert main(["compare", str(scenario_file(tmp_path, HEAD_ON)), "--out", str(tmp_path)]) == 2
    assert main(["plan", str(tmp_path / "missing.yaml"), "--out", str(tmp_path)]) == 1
