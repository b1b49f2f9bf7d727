"""Scenario documents: parsing, validation, unit normalisation and serialisation.

A scenario is a YAML mapping (JSON documents are accepted too)::

    units: {length: mm, time: s}
    vehicle:
      length: 100
      width: 80
      pose: {x: 0, y: 0, heading: 0}
      speed: 15
      v_max: 15
      a_n_max: 13.3
      lookahead: 70
    goal: {x: 600, y: 100}
    obstacles:
      - {id: box, kind: polygon, vertices: [[200, -50], [300, -50], [300, 60], [200, 60]],
         velocity: {vx: 0, vy: 0}}
      - {id: drum, kind: circle, center: [450, 150], radius: 40}
    planner: {mode: static, T_s: 4, alpha: 1.1, beta: 0.1, gamma: 0.1}
    sim: {replan_fraction: 0.1, dt: 0.01, max_time: 120}

Lengths are converted to meters on load; angles are radians; time is seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import yaml

from .geometry import CircleObstacle, ConvexPolygonObstacle, GeometryError, Point2, VehicleFootprint
from .planner import DYNAMIC, PlannerConfig
from .simulator import SimConfig

LENGTH_UNITS = {"m": 1.0, "cm": 0.01, "mm": 0.001}


class ScenarioError(ValueError):
    """Invalid scenario document; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class Scenario:
    vehicle: VehicleFootprint
    goal: Point2
    obstacles: tuple = ()
    lookahead: float | None = None
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    approximate_circles: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "goal", Point2(*map(float, self.goal)))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if self.lookahead is None:
            object.__setattr__(self, "lookahead", 0.75 * self.vehicle.length)
        ids = [ob.id for ob in self.obstacles if ob.id is not None]
        if len(ids) != len(set(ids)):
            raise ScenarioError("obstacle ids must be unique")

    def with_polygons(self, k: int | None = None) -> "Scenario":
        """Replace circles by circumscribing k-gons (for dynamic planning)."""
        k = k or self.approximate_circles or 12
        obs = tuple(ob.to_polygon(k) if isinstance(ob, CircleObstacle) else ob for ob in self.obstacles)
        return replace(self, obstacles=obs)


# --------------------------------------------------------------------------- parsing


class _Doc:
    """YAML node tree lowered to Python values, remembering source lines."""

    def __init__(self, node):
        self.node = node

    @staticmethod
    def line(node) -> int:
        return node.start_mark.line + 1


def _plain(node):
    if isinstance(node, yaml.MappingNode):
        return {k.value: (v, _plain(v)) for k, v in node.value}
    if isinstance(node, yaml.SequenceNode):
        return [(v, _plain(v)) for v in node.value]
    return yaml.safe_load(yaml.serialize(node))


class _Reader:
    def __init__(self, node, where: str):
        if not isinstance(node, yaml.MappingNode):
            raise ScenarioError(f"{where} must be a mapping", _Doc.line(node))
        self.node = node
        self.where = where
        self.items = {k.value: v for k, v in node.value}
        self.keys = {k.value: k for k, _ in node.value}
        self.used = set()

    def has(self, key):
        return key in self.items and not _is_null(self.items[key])

    def node_of(self, key):
        return self.items[key]

    def number(self, key, default=None, scale=1.0, required=False):
        self.used.add(key)
        if not self.has(key):
            if required:
                raise ScenarioError(f"{self.where}.{key} is required", _Doc.line(self.node))
            return default
        node = self.items[key]
        val = _plain(node)
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
            raise ScenarioError(f"{self.where}.{key} must be a finite number", _Doc.line(node))
        return float(val) * scale

    def value(self, key, default=None):
        self.used.add(key)
        if not self.has(key):
            return default
        return _plain(self.items[key])

    def child(self, key, required=True):
        self.used.add(key)
        if not self.has(key):
            if required:
                raise ScenarioError(f"{self.where}.{key} is required", _Doc.line(self.node))
            return None
        return _Reader(self.items[key], f"{self.where}.{key}")

    def finish(self, allowed=None):
        extra = set(self.items) - (set(allowed) if allowed is not None else self.used)
        if extra:
            key = sorted(extra, key=lambda k: self.keys[k].start_mark.line)[0]
            raise ScenarioError(f"unknown key {self.where}.{key}", _Doc.line(self.keys[key]))


def _is_null(node) -> bool:
    return isinstance(node, yaml.ScalarNode) and node.tag == "tag:yaml.org,2002:null"


def _point(node, where, scale):
    val = _plain(node)
    if isinstance(val, dict):
        val = [val.get("x", (None, None))[1], val.get("y", (None, None))[1]]
    elif isinstance(val, list):
        val = [v for _, v in val]
    if (not isinstance(val, list) or len(val) != 2
            or not all(isinstance(c, (int, float)) and not isinstance(c, bool) and math.isfinite(c) for c in val)):
        raise ScenarioError(f"{where} must be a point [x, y] or {{x, y}}", _Doc.line(node))
    return Point2(float(val[0]) * scale, float(val[1]) * scale)


def _velocity(reader: _Reader, scale):
    if not reader.has("velocity"):
        reader.used.add("velocity")
        return (0.0, 0.0)
    vel = reader.child("velocity")
    out = (vel.number("vx", 0.0, scale), vel.number("vy", 0.0, scale))
    vel.finish()
    return out


def _obstacle(node, k, scale):
    r = _Reader(node, f"obstacles[{k}]")
    kind = r.value("kind", "polygon")
    ident = r.value("id")
    ident = None if ident is None else str(ident)
    vel = _velocity(r, scale)
    try:
        if kind == "polygon":
            if not r.has("vertices"):
                raise ScenarioError(f"obstacles[{k}].vertices is required", _Doc.line(node))
            vnode = r.node_of("vertices")
            r.used.add("vertices")
            if not isinstance(vnode, yaml.SequenceNode):
                raise ScenarioError(f"obstacles[{k}].vertices must be a list", _Doc.line(vnode))
            verts = [_point(v, f"obstacles[{k}].vertices[{j}]", scale) for j, v in enumerate(vnode.value)]
            ob = ConvexPolygonObstacle(tuple(verts), vel, ident)
        elif kind == "circle":
            if not r.has("center"):
                raise ScenarioError(f"obstacles[{k}].center is required", _Doc.line(node))
            r.used.add("center")
            center = _point(r.node_of("center"), f"obstacles[{k}].center", scale)
            ob = CircleObstacle(center, r.number("radius", required=True, scale=scale), vel, ident)
        else:
            raise ScenarioError(f"obstacles[{k}].kind must be 'polygon' or 'circle', got {kind!r}", _Doc.line(node))
    except GeometryError as exc:
        raise ScenarioError(f"obstacles[{k}] ({ident or 'unnamed'}): {exc}", _Doc.line(node)) from None
    r.finish()
    return ob


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document into SI units."""
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ScenarioError(f"malformed document: {getattr(exc, 'problem', exc)}", mark.line + 1 if mark else None) from None
    if root is None:
        raise ScenarioError("empty scenario document")
    doc = _Reader(root, "scenario")

    scale = 1.0
    if doc.has("units"):
        unode = doc.node_of("units")
        doc.used.add("units")
        if isinstance(unode, yaml.ScalarNode):
            length_unit, time_unit = _plain(unode), "s"
        else:
            u = _Reader(unode, "units")
            length_unit, time_unit = u.value("length", "m"), u.value("time", "s")
            u.finish()
        if length_unit not in LENGTH_UNITS:
            raise ScenarioError(f"length unit must be one of {sorted(LENGTH_UNITS)}, got {length_unit!r}", _Doc.line(unode))
        if time_unit != "s":
            raise ScenarioError(f"time unit must be 's', got {time_unit!r}", _Doc.line(unode))
        scale = LENGTH_UNITS[length_unit]

    vr = doc.child("vehicle")
    pose = vr.child("pose", required=False)
    if pose is not None:
        position = Point2(pose.number("x", 0.0, scale), pose.number("y", 0.0, scale))
        heading = pose.number("heading", 0.0)
        pose.finish()
    else:
        position, heading = Point2(0.0, 0.0), 0.0
    length = vr.number("length", required=True, scale=scale)
    width = vr.number("width", required=True, scale=scale)
    v_max = vr.number("v_max", required=True, scale=scale)
    try:
        vehicle = VehicleFootprint(
            length=length,
            width=width,
            position=position,
            heading=heading,
            speed=vr.number("speed", v_max, scale),
            v_max=v_max,
            a_n_max=vr.number("a_n_max", required=True, scale=scale),
        )
    except GeometryError as exc:
        raise ScenarioError(str(exc), _Doc.line(vr.node)) from None
    lookahead = vr.number("lookahead", None, scale)
    if lookahead is not None and not lookahead > 0.0:
        raise ScenarioError("vehicle.lookahead must be positive", _Doc.line(vr.node_of("lookahead")))
    vr.finish()

    doc.used.add("goal")
    if not doc.has("goal"):
        raise ScenarioError("goal is required", _Doc.line(root))
    goal = _point(doc.node_of("goal"), "goal", scale)

    obstacles = []
    if doc.has("obstacles"):
        onode = doc.node_of("obstacles")
        if not isinstance(onode, yaml.SequenceNode):
            raise ScenarioError("obstacles must be a list", _Doc.line(onode))
        obstacles = [_obstacle(n, k, scale) for k, n in enumerate(onode.value)]
    doc.used.add("obstacles")
    seen = {}
    for k, ob in enumerate(obstacles):
        if ob.id is not None:
            if ob.id in seen:
                raise ScenarioError(f"duplicate obstacle id {ob.id!r}", _Doc.line(onode.value[k]))
            seen[ob.id] = k

    planner, approx = PlannerConfig(), None
    pr = doc.child("planner", required=False)
    if pr is not None:
        length_keys = ("dx", "dy", "y_min", "y_max", "goal_tolerance", "inflation")
        kw = {k: pr.number(k, None, scale) for k in length_keys}
        kw.update({k: pr.number(k) for k in ("T_s", "alpha", "beta", "gamma", "T_h")})
        kw = {k: v for k, v in kw.items() if v is not None}
        mode = pr.value("mode")
        if mode is not None:
            kw["mode"] = mode
        approx = pr.value("approximate_circles")
        if approx is True:
            approx = 12
        elif approx is False:
            approx = None
        elif approx is not None and (not isinstance(approx, int) or approx < 3):
            raise ScenarioError("planner.approximate_circles must be true/false or a side count >= 3",
                                _Doc.line(pr.node_of("approximate_circles")))
        pr.finish()
        try:
            planner = PlannerConfig(**kw)
        except ValueError as exc:
            raise ScenarioError(f"planner: {exc}", _Doc.line(pr.node)) from None

    sim = SimConfig()
    sr = doc.child("sim", required=False)
    if sr is not None:
        kw = {k: sr.number(k) for k in ("replan_fraction", "dt", "max_time", "search_window", "clearance_margin")}
        kw["goal_tolerance"] = sr.number("goal_tolerance", None, scale)
        audit = sr.value("collision_audit")
        if audit is not None:
            if not isinstance(audit, bool):
                raise ScenarioError("sim.collision_audit must be true or false", _Doc.line(sr.node_of("collision_audit")))
            kw["collision_audit"] = audit
        sr.finish()
        try:
            sim = SimConfig(**{k: v for k, v in kw.items() if v is not None})
        except ValueError as exc:
            raise ScenarioError(f"sim: {exc}", _Doc.line(sr.node)) from None

    doc.finish()
    scenario = Scenario(vehicle, goal, tuple(obstacles), lookahead, planner, sim, approx)
    if planner.mode == DYNAMIC and any(isinstance(ob, CircleObstacle) for ob in obstacles):
        if approx is None:
            k = next(k for k, ob in enumerate(obstacles) if isinstance(ob, CircleObstacle))
            raise ScenarioError(
                "circle obstacles have no future geometry in dynamic mode; set planner.approximate_circles",
                _Doc.line(onode.value[k]),
            )
        scenario = scenario.with_polygons(approx)
    return scenario


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


# --------------------------------------------------------------------------- serialising


def scenario_to_dict(s: Scenario) -> dict:
    v = s.vehicle
    obstacles = []
    for ob in s.obstacles:
        entry = {"id": ob.id} if ob.id is not None else {}
        if isinstance(ob, CircleObstacle):
            entry.update(kind="circle", center=[ob.center.x, ob.center.y], radius=ob.radius)
        else:
            entry.update(kind="polygon", vertices=[[p.x, p.y] for p in ob.vertices])
        entry["velocity"] = {"vx": ob.velocity.vx, "vy": ob.velocity.vy}
        obstacles.append(entry)
    planner = {f.name: getattr(s.planner, f.name) for f in fields(s.planner) if getattr(s.planner, f.name) is not None}
    if s.approximate_circles is not None:
        planner["approximate_circles"] = s.approximate_circles
    sim = {f.name: getattr(s.sim, f.name) for f in fields(s.sim) if getattr(s.sim, f.name) is not None}
    return {
        "units": {"length": "m", "time": "s"},
        "vehicle": {
            "length": v.length,
            "width": v.width,
            "pose": {"x": v.position.x, "y": v.position.y, "heading": v.heading},
            "speed": v.speed,
            "v_max": v.v_max,
            "a_n_max": v.a_n_max,
            "lookahead": s.lookahead,
        },
        "goal": {"x": s.goal.x, "y": s.goal.y},
        "obstacles": obstacles,
        "planner": planner,
        "sim": sim,
    }


def serialize_scenario(s: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(s), sort_keys=False, default_flow_style=None)
