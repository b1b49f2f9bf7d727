"""Closed-loop replanning simulation with ideal trajectory tracking."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import Frame, Point2, normalize_angle, obstacle_overlaps_polygon, rectangles_hit
from .planner import PathPolyline, PlannerConfig, plan_path, prepare_scene
from .trajectory import _polyline, desired_speed, fit_quintic, limited_end_slope, lookahead_point, path_slope

GOAL_REACHED = "goal-reached"
COLLISION = "collision"
NO_PATH = "no-path"
TIMEOUT = "timeout"


@dataclass(frozen=True)
class SimConfig:
    """Loop settings.

    ``goal_tolerance`` defaults to half the vehicle width. The smoother looks
    for targets up to ``search_window`` look-ahead distances along the path and
    pads the footprint by ``clearance_margin`` vehicle widths when checking a
    candidate curve.
    """

    replan_fraction: float = 0.10
    dt: float = 0.01
    max_time: float = 120.0
    collision_audit: bool = True
    goal_tolerance: float | None = None
    search_window: float = 5.0
    clearance_margin: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.replan_fraction <= 1.0:
            raise ValueError("replan_fraction must lie in (0, 1]")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if not self.max_time > 0.0:
            raise ValueError("max_time must be positive")
        if self.goal_tolerance is not None and not self.goal_tolerance > 0.0:
            raise ValueError("goal_tolerance must be positive")
        if not self.search_window >= 1.0:
            raise ValueError("search_window must be at least 1")
        if self.clearance_margin < 0.0:
            raise ValueError("clearance_margin must be non-negative")


@dataclass(frozen=True)
class WorldState:
    """Obstacles at time ``t``; positions are computed from the initial ones, not accumulated."""

    t: float
    initial: tuple

    @property
    def obstacles(self) -> list:
        return [ob if ob.velocity == (0.0, 0.0) else ob.translated((ob.velocity.vx * self.t, ob.velocity.vy * self.t))
                for ob in self.initial]


def step_world(state: WorldState, dt: float) -> WorldState:
    if dt < 0.0:
        raise ValueError("dt must be non-negative")
    return replace(state, t=state.t + dt)


@dataclass(frozen=True)
class Replan:
    t: float
    pose: tuple  # x, y, heading in the global frame
    path: PathPolyline
    trajectory: np.ndarray  # (N, 2) global-frame samples of the quintic

    def global_path(self) -> np.ndarray:
        """The planned polyline (starting at the vehicle) in the global frame."""
        return Frame(self.pose[2], self.pose[:2]).point_out(self.path.xy())


@dataclass
class SimLog:
    times: list = field(default_factory=list)
    poses: list = field(default_factory=list)  # (x, y, heading)
    speeds: list = field(default_factory=list)
    curvatures: list = field(default_factory=list)
    t_p: list = field(default_factory=list)
    obstacle_positions: list = field(default_factory=list)
    replans: list = field(default_factory=list)
    outcome: str | None = None
    collisions: int = 0
    path_length: float = 0.0
    duration: float = 0.0

    def record(self, t, pose, speed, kappa, t_p, world: WorldState):
        self.times.append(float(t))
        self.poses.append(tuple(map(float, pose)))
        self.speeds.append(float(speed))
        self.curvatures.append(float(kappa))
        self.t_p.append(float(t_p))
        self.obstacle_positions.append([tuple(_anchor(ob)) for ob in world.obstacles])

    def finish(self, outcome: str):
        if self.outcome is not None:
            raise RuntimeError("outcome already set")
        self.outcome = outcome
        xy = np.array([p[:2] for p in self.poses])
        self.path_length = float(np.sum(np.linalg.norm(np.diff(xy, axis=0), axis=1))) if len(xy) > 1 else 0.0
        self.duration = self.times[-1] - self.times[0] if self.times else 0.0


def _num(v):
    return None if isinstance(v, float) and math.isnan(v) else v


def log_to_dict(log: SimLog) -> dict:
    """Plain-data form of a log (NaN written as null) for JSON output."""
    return {
        "outcome": log.outcome,
        "collisions": log.collisions,
        "path_length": log.path_length,
        "duration": log.duration,
        "samples": [
            {"t": t, "x": p[0], "y": p[1], "heading": p[2], "v": v, "curvature": k, "T_p": _num(tp)}
            for t, p, v, k, tp in zip(log.times, log.poses, log.speeds, log.curvatures, log.t_p)
        ],
        "obstacle_positions": [[list(a) for a in row] for row in log.obstacle_positions],
        "replans": [
            {
                "t": r.t,
                "pose": list(r.pose),
                "terminated": r.path.terminated,
                "path": np.asarray(r.path.points, dtype=float).tolist(),
                "trajectory": np.asarray(r.trajectory, dtype=float).tolist(),
            }
            for r in log.replans
        ],
    }


def log_from_dict(data: dict) -> SimLog:
    log = SimLog()
    for row in data["samples"]:
        log.times.append(float(row["t"]))
        log.poses.append((float(row["x"]), float(row["y"]), float(row["heading"])))
        log.speeds.append(float(row["v"]))
        log.curvatures.append(float(row["curvature"]))
        log.t_p.append(math.nan if row["T_p"] is None else float(row["T_p"]))
    log.obstacle_positions = [[tuple(a) for a in row] for row in data.get("obstacle_positions", [])]
    for r in data.get("replans", []):
        path = PathPolyline(np.asarray(r["path"], dtype=float).reshape(-1, 3), r["terminated"])
        log.replans.append(Replan(float(r["t"]), tuple(r["pose"]), path, np.asarray(r["trajectory"], dtype=float).reshape(-1, 2)))
    log.outcome = data["outcome"]
    log.collisions = int(data["collisions"])
    log.path_length = float(data["path_length"])
    log.duration = float(data["duration"])
    return log


def _anchor(ob) -> Point2:
    return ob.center if hasattr(ob, "center") and not hasattr(ob, "vertices") else ob.centroid


def _footprint(vehicle, pose) -> np.ndarray:
    hl, hw = vehicle.length / 2.0, vehicle.width / 2.0
    local = np.array([[hl, -hw], [hl, hw], [-hl, hw], [-hl, -hw]])
    return Frame(pose[2], pose[:2]).point_out(local)


def audit(vehicle, pose, obstacles) -> bool:
    """True when the footprint at ``pose`` touches any obstacle."""
    fp = _footprint(vehicle, pose)
    return any(obstacle_overlaps_polygon(ob, fp) for ob in obstacles)


def _arc_positions(pts: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])


def _free_segment(scene, a, b, step: float, skip=(), tolerance: float = 0.0) -> bool:
    n = max(2, int(math.ceil(math.hypot(b[0] - a[0], b[1] - a[1]) / step)) + 1)
    u = np.linspace(0.0, 1.0, n)[:, None]
    return not scene.blocked(a + u * (np.asarray(b) - a), skip, tolerance).any()


def _reachable_best(scene, a, x: float, skip=()):
    """Best admissible point of section ``x`` in the free run reached by driving straight from ``a``."""
    ys, _ = scene.section_samples(x)
    pts = np.column_stack([np.full(ys.shape, x), ys])
    free = ~scene.blocked(pts, skip)
    j = int(np.argmin(np.abs(ys - a[1])))
    if not free[j]:
        return None
    lo, hi = j, j
    while lo > 0 and free[lo - 1]:
        lo -= 1
    while hi < len(ys) - 1 and free[hi + 1]:
        hi += 1
    vals = scene.field(pts[lo:hi + 1])
    k = int(np.argmax(vals))
    if not scene.config.admissible(vals[k]):
        return None
    return pts[lo + k]


def traversable_path(path: PathPolyline, scene) -> np.ndarray:
    """The path from the origin as a polyline that stays out of configuration obstacles.

    Safest points of neighbouring sections may sit on opposite sides of an
    obstacle. A blocked chord is replaced by a lateral-then-forward or
    forward-then-lateral dogleg when one is free. Grazing a configuration
    obstacle by less than a quarter section spacing is allowed: section
    sampling cannot see slivers between sections. Otherwise the section's point
    is replaced by the best admissible point reachable by driving straight on,
    which follows the obstacle boundary; if there is none the polyline ends.
    """
    pts = path.xy()
    step = min(scene.dx, scene.dy) / 4.0
    tolerance = scene.dy / 4.0
    # obstacles whose margin the vehicle is already inside are being left, not avoided
    skip = set(np.flatnonzero([scene.blocked(pts[:1], set(range(len(scene.occupancy))) - {k})[0]
                               for k in range(len(scene.occupancy))]))

    def free(a, b):
        return _free_segment(scene, a, b, step, skip, tolerance)

    out = [pts[0]]
    for b in pts[1:]:
        a = out[-1]
        if free(a, b):
            out.append(b)
            continue
        for corner in (np.array([a[0], b[1]]), np.array([b[0], a[1]])):
            if free(a, corner) and free(corner, b):
                out.extend([corner, b])
                break
        else:
            ahead = np.array([b[0], a[1]])
            if not free(a, ahead):
                break
            c = _reachable_best(scene, a, b[0], skip)
            if c is None or not free(ahead, c):
                break
            out.extend([ahead, c] if abs(c[1] - a[1]) > 1e-12 else [c])
    return np.array(out)


def footprint_clearance(vehicle, world: WorldState, frame: Frame, margin: float):
    """Check a candidate curve with the real footprint against obstacles at their arrival-time positions.

    Obstacles are advanced to the time the vehicle reaches each sample under
    the curvature speed law, so moving obstacles are checked where they will
    be. ``margin`` pads the footprint on every side.
    """
    hl, hw = vehicle.length / 2.0 + margin, vehicle.width / 2.0 + margin
    spacing = vehicle.width / 10.0

    def clear(seg) -> bool:
        n = max(8, int(math.ceil(seg.x_end / spacing)) + 1)
        xs = np.linspace(0.0, seg.x_end, n)
        ys, slope = seg.y(xs), seg.dy(xs)
        ds = np.hypot(np.diff(xs), np.diff(ys))
        v = desired_speed(seg.curvature(xs), vehicle.v_max, vehicle.a_n_max)
        t = world.t + np.concatenate([[0.0], np.cumsum(ds / (0.5 * (v[1:] + v[:-1])))])
        centers = frame.point_out(np.column_stack([xs, ys]))
        headings = frame.rotation + np.arctan(slope)
        for ob in world.initial:
            offsets = np.outer(t, np.asarray(ob.velocity, dtype=float))
            if rectangles_hit(centers, headings, hl, hw, ob, offsets).any():
                return False
        return True

    return clear


def smoothing_segment(path, reach: float, kappa: float, scene=None, clear=None, extend: float = 5.0):
    """Quintic toward the farthest path point, up to ``extend * reach`` ahead, whose curve is clear.

    With a scene the path is first made traversable. Candidates are the path
    vertices and the look-ahead point; each is tried with the path slope and
    with a flat end, and accepted when ``clear(segment)`` holds. Without a
    check, or if nothing is clear, the plain look-ahead curve is returned.
    """
    pts = traversable_path(path, scene) if scene is not None else _polyline(path)
    if len(pts) < 2:
        pts = path.xy()
    arcs = _arc_positions(pts)
    reach = min(reach, arcs[-1])
    cands = sorted({reach, *(float(a) for a in arcs if 0.0 < a <= extend * reach)}, reverse=True)
    plain = None
    for d in [reach] + cands:
        target = lookahead_point(pts, d)
        if target.x <= 0.0:
            continue
        slope = limited_end_slope(path_slope(pts, d), target.x, target.y)
        if plain is None:
            plain = fit_quintic(target.x, target.y, slope, kappa)
            if clear is None:
                return plain
            continue
        for m in (slope, 0.0):
            seg = fit_quintic(target.x, target.y, m, kappa)
            if clear(seg):
                return seg
    return plain


def run(scenario, planner_config: PlannerConfig | None = None, sim_config: SimConfig | None = None) -> SimLog:
    """Plan, smooth, track a fraction of the trajectory, advance the world, repeat."""
    pcfg = planner_config or scenario.planner
    scfg = sim_config or scenario.sim
    v0 = scenario.vehicle
    goal = np.asarray(scenario.goal, dtype=float)
    tol = scfg.goal_tolerance if scfg.goal_tolerance is not None else v0.width / 2.0
    lookahead = scenario.lookahead
    n_max = int(math.ceil(scfg.max_time / scfg.dt - 1e-9))

    world = WorldState(0.0, tuple(scenario.obstacles))
    pose = np.array([v0.position.x, v0.position.y, v0.heading])
    speed = v0.speed
    kappa = 0.0
    steps = 0
    log = SimLog()
    log.record(0.0, pose, speed, kappa, math.nan, world)

    def done():
        return math.hypot(*(pose[:2] - goal)) <= tol

    if scfg.collision_audit and audit(v0, pose, world.obstacles):
        log.collisions += 1
        log.finish(COLLISION)
        return log

    while True:
        if done():
            log.finish(GOAL_REACHED)
            return log
        if steps >= n_max:
            log.finish(TIMEOUT)
            return log
        vehicle = replace(v0, position=Point2(*pose[:2]), heading=float(pose[2]), speed=min(speed, v0.v_max))
        view = replace(scenario, vehicle=vehicle, obstacles=tuple(world.obstacles))
        scene = prepare_scene(view, pcfg)
        path = plan_path(view, pcfg, scene=scene)
        if path.empty:
            log.finish(NO_PATH)
            return log
        frame = Frame(pose[2], pose[:2])
        clear = footprint_clearance(v0, world, frame, scfg.clearance_margin * v0.width)
        seg = smoothing_segment(path, lookahead, kappa, scene, clear, scfg.search_window)
        if seg is None:
            log.finish(NO_PATH)
            return log
        xs_tab, s_tab = seg.arc_table()
        total = s_tab[-1]
        traj = frame.point_out(np.column_stack([xs_tab[::40], seg.y(xs_tab[::40])]))
        log.replans.append(Replan(world.t, tuple(map(float, pose)), path, traj))
        t_p = float(path.points[0, 2])

        s, s_stop = 0.0, scfg.replan_fraction * total
        x_here = 0.0
        while True:
            v = desired_speed(seg.curvature(x_here), v0.v_max, v0.a_n_max)
            s = min(s + v * scfg.dt, total)
            x_here = float(np.interp(s, s_tab, xs_tab))
            local = (x_here, float(seg.y(x_here)))
            pose = np.array([*frame.point_out(local), normalize_angle(frame.rotation + math.atan(float(seg.dy(x_here))))])
            kappa = float(seg.curvature(x_here))
            speed = desired_speed(kappa, v0.v_max, v0.a_n_max)
            world = step_world(world, scfg.dt)
            steps += 1
            log.record(world.t, pose, speed, kappa, t_p, world)
            if scfg.collision_audit and audit(v0, pose, world.obstacles):
                log.collisions += 1
                log.finish(COLLISION)
                return log
            if done() or steps >= n_max or s >= s_stop or s >= total:
                break
