"""Static and dynamic TD path planning.

The workspace ahead of the vehicle is cut into sections perpendicular to its
heading. On every section the composed field ``min(TD, RF, Z_inf...)`` is
sampled and its maximum (the safest point) is kept; the path is the chain of
safest points, cut short at the first section whose best value is not
admissible.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .geometry import (
    CircleObstacle,
    ConvexPolygonObstacle,
    Frame,
    GeometryError,
    Obstacle,
    Point2,
    Velocity2,
    convex_hull,
    inflate,
    penetration_depth,
    relative_to,
    signed_area,
)
from .guidance import RouteParams, goal_lateral_offset, rf_feasibility, route_value, zinf_obstacle
from .td import INF, SectionProfile, section_argmax, td_set

log = logging.getLogger(__name__)

STATIC = "static"
DYNAMIC = "dynamic"

REACHED_GOAL = "reached-goal-section"
SAFETY_CUTOFF = "safety-cutoff"
WORKSPACE_EDGE = "workspace-edge"


class PlanningError(ValueError):
    pass


@dataclass(frozen=True)
class PlannerConfig:
    """Planner parameters; ``None`` fields are derived from the vehicle at plan time.

    Defaults: ``dx = length/4``, ``dy = width/4``, ``goal_tolerance = dy``,
    section extent ``+-`` the current distance to the goal (at least 4 vehicle
    lengths), inflation radius = half the footprint diagonal.
    """

    mode: str = DYNAMIC
    T_s: float = 4.0
    alpha: float = 1.1
    beta: float = 0.1
    gamma: float = 0.1
    dx: float | None = None
    dy: float | None = None
    y_min: float | None = None
    y_max: float | None = None
    T_h: float = 10.0
    goal_tolerance: float | None = None
    inflation: float | None = None

    def __post_init__(self):
        if self.mode not in (STATIC, DYNAMIC):
            raise ValueError(f"unknown planner mode {self.mode!r}")
        RouteParams(self.T_s, self.alpha, self.beta, self.gamma)
        for name in ("dx", "dy", "goal_tolerance"):
            val = getattr(self, name)
            if val is not None and not val > 0.0:
                raise ValueError(f"{name} must be positive")
        if self.y_min is not None and self.y_max is not None and not self.y_min < self.y_max:
            raise ValueError("y_min must be below y_max")
        if not self.T_h > self.T_s:
            raise ValueError("T_h must exceed T_s")
        if self.inflation is not None and self.inflation < 0.0:
            raise ValueError("inflation must be non-negative")

    def route(self, delta: float) -> RouteParams:
        return RouteParams(self.T_s, self.alpha, self.beta, self.gamma, delta)

    def admissible(self, t_p):
        t_p = np.asarray(t_p)
        return t_p >= self.T_s if self.mode == DYNAMIC else t_p > 0.0


@dataclass(frozen=True)
class FutureObstacle:
    """Predicted shape of an obstacle, frozen where each vertex crosses the lateral axis."""

    id: str | None
    polygon: ConvexPolygonObstacle
    vertex_times: tuple
    source: ConvexPolygonObstacle

    @property
    def centers(self) -> np.ndarray:
        v = self.polygon.array
        return (v + np.roll(v, -1, axis=0)) / 2.0

    @property
    def lengths(self) -> np.ndarray:
        v = self.polygon.array
        return np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)


def lateral_axis_time(x: float, v_rel_x: float) -> float:
    """Time for a point at longitudinal offset ``x`` to reach the vehicle's lateral axis."""
    if x == 0.0:
        return 0.0
    if v_rel_x == 0.0:
        return INF
    ratio = x / v_rel_x
    return abs(ratio) if ratio < 0.0 else INF


def future_relative_geometry(poly: ConvexPolygonObstacle, vehicle_velocity, T_h: float = 10.0,
                             min_area: float = 1e-12) -> FutureObstacle:
    """Move every vertex to where it will be when it crosses the lateral axis.

    ``poly`` is in the vehicle frame carrying its *absolute* velocity
    (components along the vehicle axes); ``vehicle_velocity`` is the vehicle's
    own velocity in that frame. Crossing times that never occur are capped at
    ``T_h``. The result carries the relative velocity. If the displaced
    vertices lose convexity the hull is used.
    """
    if not isinstance(poly, ConvexPolygonObstacle):
        raise PlanningError("future geometry is only defined for polygons")
    v_abs = np.asarray(poly.velocity, dtype=float)
    v_rel = v_abs - np.asarray(vehicle_velocity, dtype=float)
    verts = poly.array
    times = np.array([lateral_axis_time(x, v_rel[0]) for x in verts[:, 0]])
    times = np.where(np.isfinite(times), times, T_h)
    moved = verts + times[:, None] * v_abs[None, :]
    hull = convex_hull(moved)
    if len(hull) < 3 or abs(signed_area(hull)) < min_area:
        raise GeometryError(f"future geometry of obstacle {poly.id!r} is degenerate")
    future = ConvexPolygonObstacle(tuple(map(tuple, hull)), Velocity2(*v_rel), poly.id, poly.inflation)
    return FutureObstacle(poly.id, future, tuple(times), poly)


@dataclass(frozen=True)
class PathPolyline:
    """Safest points ``(x, y_p, T_p)`` in the vehicle frame, x strictly increasing."""

    points: np.ndarray
    terminated: str

    @property
    def empty(self) -> bool:
        return len(self.points) == 0

    def __len__(self):
        return len(self.points)

    def xy(self, include_origin: bool = True) -> np.ndarray:
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)[:, :2]
        if include_origin:
            pts = np.vstack([[0.0, 0.0], pts])
        return pts

    def length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.xy(), axis=0), axis=1)))


@dataclass
class PlanningScene:
    """A scenario prepared for one planning call, all in the vehicle frame."""

    frame: Frame
    config: PlannerConfig
    goal: Point2
    delta: float
    dx: float
    dy: float
    y_min: float
    y_max: float
    goal_tolerance: float
    occupancy: list  # obstacles whose zero/inf field blocks the section
    movers: list = field(default_factory=list)  # obstacles whose TD field is composed in
    future: list = field(default_factory=list)

    @property
    def route(self) -> RouteParams:
        return self.config.route(self.delta)

    def field(self, points) -> np.ndarray:
        """Composed scalar field at ``(N, 2)`` points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        value = np.asarray(route_value(pts, self.route), dtype=float)
        if self.movers:
            value = np.minimum(value, td_set(pts, self.movers))
        for ob in self.occupancy:
            value = np.minimum(value, zinf_obstacle(pts, ob))
        return value

    def blocked(self, points, skip=(), tolerance: float = 0.0) -> np.ndarray:
        """True where a point lies inside a configuration obstacle.

        Obstacles whose index is in ``skip`` are ignored; points less than
        ``tolerance`` deep count as free.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        hit = np.zeros(len(pts), dtype=bool)
        for k, ob in enumerate(self.occupancy):
            if k in skip:
                continue
            if tolerance > 0.0:
                hit |= penetration_depth(pts, ob) > tolerance
            else:
                hit |= np.asarray(zinf_obstacle(pts, ob)) == 0.0
        return hit

    def section_samples(self, x: float) -> tuple[np.ndarray, np.ndarray]:
        n = int(math.floor((self.y_max - self.y_min) / self.dy + 1e-9))
        ys = self.y_min + self.dy * np.arange(n + 1)
        c = math.cos(self.delta)
        if abs(c) > 1e-12:
            y_star = x * math.tan(self.delta)
            if self.y_min <= y_star <= self.y_max:
                ys = np.unique(np.append(ys, y_star))
        pts = np.column_stack([np.full(ys.shape, x), ys])
        return ys, goal_lateral_offset(pts, self.delta)

    def section_xs(self) -> np.ndarray:
        x_goal = self.goal.x
        if x_goal <= 0.0:
            return np.empty(0)
        k = int(math.floor(x_goal / self.dx - 1e-9))
        xs = self.dx * np.arange(1, k + 1)
        return np.append(xs[xs < x_goal], x_goal)

    def y_extent(self) -> float:
        xs = [0.0, max(self.goal.x, 0.0)]
        corners = np.array([(x, y) for x in xs for y in (self.y_min, self.y_max)])
        return float(np.max(np.abs(goal_lateral_offset(corners, self.delta))))


def _resolve(config: PlannerConfig, vehicle, goal_pc: Point2):
    dx = config.dx if config.dx is not None else vehicle.length / 4.0
    dy = config.dy if config.dy is not None else vehicle.width / 4.0
    reach = max(math.hypot(*goal_pc), 4.0 * vehicle.length)
    y_min = config.y_min if config.y_min is not None else -reach
    y_max = config.y_max if config.y_max is not None else reach
    tol = config.goal_tolerance if config.goal_tolerance is not None else dy
    return dx, dy, y_min, y_max, tol


def prepare_scene(scenario, config: PlannerConfig | None = None) -> PlanningScene:
    """Inflate, move to the vehicle frame and (dynamic mode) project obstacles forward."""
    config = config or scenario.planner
    vehicle = scenario.vehicle
    frame = Frame(vehicle.heading, vehicle.position)
    goal = Point2(*frame.point_in(scenario.goal))
    delta = math.atan2(goal.y, goal.x)
    dx, dy, y_min, y_max, tol = _resolve(config, vehicle, goal)
    r = config.inflation if config.inflation is not None else vehicle.circumradius
    inflated = [inflate(ob, r) for ob in scenario.obstacles]
    scene = PlanningScene(frame, config, goal, delta, dx, dy, y_min, y_max, tol, occupancy=[])
    if config.mode == STATIC:
        scene.occupancy = [relative_to(ob, frame) for ob in inflated]
        return scene
    v_vehicle = Velocity2(vehicle.speed, 0.0)
    for ob in inflated:
        if isinstance(ob, CircleObstacle):
            raise PlanningError(
                f"circle obstacle {ob.id!r} has no future geometry in dynamic mode; approximate it by a polygon"
            )
        local = relative_to(ob, frame)  # absolute velocity, vehicle axes
        try:
            fut = future_relative_geometry(local, v_vehicle, config.T_h)
            shape = fut.polygon
            scene.future.append(fut)
        except GeometryError as exc:
            log.warning("%s; using its current geometry", exc)
            shape = local.with_velocity(np.subtract(local.velocity, v_vehicle))
        scene.occupancy.append(shape)
        scene.movers.append(shape)
    return scene


def section_tp(x: float, scene: PlanningScene) -> tuple[float, float]:
    """Best field value on section ``x`` and where it is attained."""
    ys, offsets = scene.section_samples(x)
    pts = np.column_stack([np.full(ys.shape, x), ys])
    return section_argmax(SectionProfile(x, ys, scene.field(pts), offsets))


def _evaluate_sections(scene: PlanningScene, xs: np.ndarray):
    samples = [scene.section_samples(x) for x in xs]
    if not samples:
        return []
    pts = np.concatenate([np.column_stack([np.full(ys.shape, x), ys]) for x, (ys, _) in zip(xs, samples)])
    values = scene.field(pts)
    out, start = [], 0
    for x, (ys, off) in zip(xs, samples):
        vals = values[start:start + len(ys)]
        start += len(ys)
        out.append(section_argmax(SectionProfile(x, ys, vals, off)))
    return out


def plan_path(scenario, config: PlannerConfig | None = None, scene: PlanningScene | None = None) -> PathPolyline:
    """Chain the safest points from the vehicle toward the goal section.

    An empty polyline (first section already inadmissible, or goal behind the
    vehicle) means no path; it is a result, not an error.
    """
    if scene is None:
        scene = prepare_scene(scenario, config)
    config = scene.config
    if config.mode == DYNAMIC:
        check = rf_feasibility(scene.route, scene.y_extent())
        if not check:
            raise PlanningError(f"route field drops below T_s inside the workspace (margin {check.margin:.3g} s)")
    xs = scene.section_xs()
    if xs.size == 0:
        return PathPolyline(np.empty((0, 3)), WORKSPACE_EDGE)
    rows = []
    terminated = REACHED_GOAL
    for x, (t_p, y_p) in zip(xs, _evaluate_sections(scene, xs)):
        if not config.admissible(t_p):
            terminated = SAFETY_CUTOFF
            break
        rows.append((x, y_p, t_p))
    if rows and terminated == REACHED_GOAL and abs(rows[-1][1] - scene.goal.y) <= scene.goal_tolerance:
        rows[-1] = (rows[-1][0], scene.goal.y, rows[-1][2])
    return PathPolyline(np.array(rows, dtype=float).reshape(-1, 3), terminated)


def field_grid(scene: PlanningScene, x_step: float | None = None, y_step: float | None = None):
    """Composed field on a regular grid in the vehicle frame, for plotting."""
    x_step = x_step or scene.dx
    y_step = y_step or scene.dy
    x_end = max(scene.goal.x, x_step)
    xs = np.arange(0.0, x_end + x_step / 2.0, x_step)
    ys = np.arange(scene.y_min, scene.y_max + y_step / 2.0, y_step)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    values = scene.field(np.column_stack([gx.ravel(), gy.ravel()])).reshape(gx.shape)
    return xs, ys, values
