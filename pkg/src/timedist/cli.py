"""Command line front end: ``timedist predict|plan|simulate|compare|render FILE``.

Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 no path, 4 collision
(``simulate`` only).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from .collision import predict_ttc, relativize
from .geometry import CircleObstacle, GeometryError
from .guidance import rf_feasibility
from .oracle import grid_astar
from .planner import PlanningError, field_grid, plan_path, prepare_scene
from .render import draw, log_svg, plan_svg
from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario, scenario_to_dict
from .simulator import COLLISION, GOAL_REACHED, NO_PATH, log_from_dict, log_to_dict, run

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_NO_PATH, EXIT_COLLISION = 0, 1, 2, 3, 4
COMMANDS = ("predict", "plan", "simulate", "compare", "render")
TRAJECTORY_COLUMNS = ("t", "x", "y", "heading", "v", "T_p")

log = logging.getLogger("timedist")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return _jsonable(v.item())
    return v


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=1, sort_keys=True, allow_nan=False) + "\n"


def _cell(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, float):
        return "inf" if v == math.inf else repr(v)
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    target = out / name
    target.write_text(text, encoding="utf-8")
    return target


# --------------------------------------------------------------------------- inputs


def with_mode(scenario: Scenario, mode: str | None) -> Scenario:
    """Override the planner mode, approximating circles when switching to dynamic."""
    if mode is None or mode == scenario.planner.mode:
        return scenario
    scenario = replace(scenario, planner=replace(scenario.planner, mode=mode))
    if mode == "dynamic" and any(isinstance(ob, CircleObstacle) for ob in scenario.obstacles):
        if scenario.approximate_circles is None:
            raise CliError("circle obstacles need planner.approximate_circles for dynamic mode", EXIT_INVALID)
        scenario = scenario.with_polygons(scenario.approximate_circles)
    return scenario


def check_route(scenario: Scenario):
    """Refuse to plan when the route field cannot stay admissible across the workspace."""
    scene = prepare_scene(scenario)
    check = rf_feasibility(scene.route, scene.y_extent())
    if not check:
        raise CliError(f"route field infeasible: alpha*T_s - beta*|y|^gamma falls {-check.margin:.4g} s below T_s",
                       EXIT_INVALID)
    return scene


def scenario_from_dict(data: dict) -> Scenario:
    return parse_scenario(yaml.safe_dump(data, sort_keys=False))


# --------------------------------------------------------------------------- commands


def cmd_predict(scenario, args, stem):
    report = predict_ttc(relativize(scenario))
    cp = report.critical_point
    frame_point = None if cp is None else list(cp)
    data = {
        "ttc": report.ttc,
        "collision_predicted": report.collision_predicted,
        "critical_point_vehicle_frame": frame_point,
        "per_obstacle": dict(report.per_obstacle),
    }
    path = _write(args.out, f"{stem}_ttc.json", dump_json(data))
    ttc = "inf" if not report.collision_predicted else f"{report.ttc:.6g} s"
    print(f"ttc {ttc} -> {path}")
    return EXIT_OK


def path_rows(scenario, scene, path):
    """CSV rows for a planned polyline driven at constant speed."""
    v = scenario.vehicle.speed if scenario.vehicle.speed > 0.0 else scenario.vehicle.v_max
    local = path.xy()
    xy = scene.frame.point_out(local)
    seg = np.diff(xy, axis=0)
    heading = np.arctan2(seg[:, 1], seg[:, 0])
    heading = np.append(heading, heading[-1]) if len(heading) else np.array([scene.frame.rotation])
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(seg, axis=1))])
    t_p = np.concatenate([[math.nan], path.points[:, 2]]) if not path.empty else np.array([math.nan])
    return [(float(si / v), float(p[0]), float(p[1]), float(h), float(v), float(tp))
            for si, p, h, tp in zip(s, xy, heading, t_p)]


def cmd_plan(scenario, args, stem):
    scene = check_route(scenario)
    path = plan_path(scenario, scene=scene)
    written = [
        _write(args.out, f"{stem}_path.csv", csv_text(TRAJECTORY_COLUMNS, path_rows(scenario, scene, path))),
        _write(args.out, f"{stem}_plan.svg", plan_svg(scenario, scene, path)),
    ]
    if args.field_dump:
        xs, ys, values = field_grid(scene)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        local = np.column_stack([gx.ravel(), gy.ravel()])
        world = scene.frame.point_out(local)
        rows = [(float(a), float(b), float(c), float(d), float(f))
                for (a, b), (c, d), f in zip(local, world, values.ravel())]
        written.append(_write(args.out, f"{stem}_field.csv",
                              csv_text(("x_vehicle", "y_vehicle", "x", "y", "value"), rows)))
    for p in written:
        print(p)
    if path.empty:
        print(f"no path ({path.terminated})", file=sys.stderr)
        return EXIT_NO_PATH
    print(f"{len(path)} sections, length {path.length():.6g} m, {path.terminated}")
    return EXIT_OK


def trajectory_rows(sim_log):
    return [(t, p[0], p[1], p[2], v, tp)
            for t, p, v, tp in zip(sim_log.times, sim_log.poses, sim_log.speeds, sim_log.t_p)]


def cmd_simulate(scenario, args, stem):
    check_route(scenario)
    sim_log = run(scenario)
    data = {"scenario": scenario_to_dict(scenario), "log": log_to_dict(sim_log)}
    for p in (
        _write(args.out, f"{stem}_log.json", dump_json(data)),
        _write(args.out, f"{stem}_trajectory.csv", csv_text(TRAJECTORY_COLUMNS, trajectory_rows(sim_log))),
        _write(args.out, f"{stem}_simulate.svg", log_svg(scenario, sim_log)),
    ):
        print(p)
    print(f"{sim_log.outcome}: length {sim_log.path_length:.6g} m in {sim_log.duration:.4g} s, "
          f"{len(sim_log.replans)} replans")
    if sim_log.outcome == COLLISION:
        return EXIT_COLLISION
    if sim_log.outcome == NO_PATH:
        return EXIT_NO_PATH
    return EXIT_OK


def compared_length(scenario, sim_log) -> float:
    """Tracked length plus the straight remainder to the goal (runs stop within tolerance)."""
    if sim_log.outcome != GOAL_REACHED:
        return math.inf
    end = np.asarray(sim_log.poses[-1][:2])
    return sim_log.path_length + float(np.linalg.norm(np.asarray(scenario.goal) - end))


def cmd_compare(scenario, args, stem):
    if any(ob.velocity != (0.0, 0.0) for ob in scenario.obstacles):
        raise CliError("compare needs stationary obstacles (the grid baseline has no time axis)", EXIT_INVALID)
    modes = [args.mode] if args.mode else ["static", "dynamic"]
    scene = check_route(scenario)
    astar = grid_astar(scenario, cell=scene.dy, inflation=scene.config.inflation)
    rows = [("grid_astar", "-", astar.length, 1.0 if astar.length < math.inf else math.nan)]
    for mode in modes:
        sc = with_mode(scenario, mode)
        check_route(sc)
        sim_log = run(sc)
        length = compared_length(sc, sim_log)
        ratio = length / astar.length if math.isfinite(astar.length) else math.nan
        rows.append((f"td_{mode}", sim_log.outcome, length, ratio))
    header = ("method", "outcome", "length", "ratio")
    print(_write(args.out, f"{stem}_compare.csv", csv_text(header, rows)))
    print(f"{'method':<12} {'outcome':<13} {'length [m]':>11} {'ratio':>7}")
    for method, outcome, length, ratio in rows:
        print(f"{method:<12} {outcome:<13} {length:>11.5f} {ratio:>7.3f}")
    return EXIT_OK


def cmd_render(source: Path, args):
    text = source.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = None
    if isinstance(data, dict) and "log" in data and "scenario" in data:
        scenario = scenario_from_dict(data["scenario"])
        svg = log_svg(scenario, log_from_dict(data["log"]))
    else:
        scenario = with_mode(parse_scenario(text), args.mode)
        svg = draw(scenario, title="scenario")
    stem = source.stem.removesuffix("_log")
    print(_write(args.out, f"{stem}.svg", svg))
    return EXIT_OK


# --------------------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="timedist", description="Time Distance motion planning.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("file", type=Path, help="scenario file (or, for render, a saved simulation log)")
    p.add_argument("--out", type=Path, default=Path("timedist-out"), help="output directory")
    p.add_argument("--mode", choices=("static", "dynamic"), help="override the scenario's planner mode")
    p.add_argument("--field-dump", action="store_true", help="plan: also write the composed field as a grid CSV")
    p.add_argument("--seed", type=int, default=None,
                   help="accepted for reproducible pipelines; every command is deterministic")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.command == "render":
            return cmd_render(args.file, args)
        scenario = with_mode(load_scenario(args.file), args.mode)
        stem = args.file.stem
        handler = {"predict": cmd_predict, "plan": cmd_plan, "simulate": cmd_simulate, "compare": cmd_compare}
        return handler[args.command](scenario, args, stem)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ScenarioError, GeometryError, PlanningError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
