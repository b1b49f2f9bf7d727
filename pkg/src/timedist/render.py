"""Static SVG overlays of scenes, plans and simulation logs.

The output is plain text built by hand so that identical inputs give
identical bytes: fixed number formatting, no timestamps, no ids drawn from
memory addresses.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import CircleObstacle, inflate

CANVAS = 800.0
PAD = 0.08  # fraction of the larger extent

STYLE = {
    "obstacle": 'fill="#9aa0a6" fill-opacity="0.85" stroke="#3c4043" stroke-width="1"',
    "obstacle_end": 'fill="none" stroke="#3c4043" stroke-width="1" stroke-dasharray="3 3"',
    "inflated": 'fill="none" stroke="#e37400" stroke-width="1" stroke-dasharray="6 3"',
    "ghost": 'fill="#a142f4" fill-opacity="0.15" stroke="#a142f4" stroke-width="1"',
    "track": 'fill="none" stroke="#5f6368" stroke-width="0.8" stroke-dasharray="1 3"',
    "path": 'fill="none" stroke="#1a73e8" stroke-width="1.5"',
    "trajectory": 'fill="none" stroke="#d93025" stroke-width="1.5"',
    "vehicle": 'fill="#34a853" fill-opacity="0.25" stroke="#188038" stroke-width="1"',
    "goal": 'fill="#fbbc04" stroke="#b06000" stroke-width="1"',
}


def _fmt(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


class _Canvas:
    """Maps world metres to SVG pixels with y pointing up."""

    def __init__(self, points: np.ndarray):
        lo = points.min(axis=0)
        hi = points.max(axis=0)
        span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-6))
        lo = lo - PAD * span
        hi = hi + PAD * span
        self.scale = CANVAS / float(max(hi[0] - lo[0], hi[1] - lo[1]))
        self.lo = lo
        self.width = (hi[0] - lo[0]) * self.scale
        self.height = (hi[1] - lo[1]) * self.scale
        self.items: list[str] = []

    def xy(self, p) -> tuple[float, float]:
        return (p[0] - self.lo[0]) * self.scale, self.height - (p[1] - self.lo[1]) * self.scale

    def _pts(self, pts) -> str:
        return " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in (self.xy(p) for p in pts))

    def polygon(self, pts, style: str):
        self.items.append(f'<polygon points="{self._pts(pts)}" {STYLE[style]}/>')

    def polyline(self, pts, style: str):
        if len(pts) >= 2:
            self.items.append(f'<polyline points="{self._pts(pts)}" {STYLE[style]}/>')

    def circle(self, center, radius: float, style: str):
        cx, cy = self.xy(center)
        self.items.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(radius * self.scale)}" {STYLE[style]}/>')

    def shape(self, ob, style: str):
        if isinstance(ob, CircleObstacle):
            self.circle(ob.center, ob.radius, style)
        else:
            self.polygon(ob.array, style)

    def text(self, p, label: str):
        x, y = self.xy(p)
        label = label.replace("&", "&amp;").replace("<", "&lt;")
        self.items.append(f'<text x="{_fmt(x + 4)}" y="{_fmt(y - 4)}" font-size="11" font-family="sans-serif">{label}</text>')

    def svg(self, title: str | None = None) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(self.width)}" height="{_fmt(self.height)}" '
                f'viewBox="0 0 {_fmt(self.width)} {_fmt(self.height)}">')
        body = ['<rect width="100%" height="100%" fill="white"/>']
        if title:
            body.append(f'<title>{title}</title>')
        return "\n".join([head, *body, *self.items, "</svg>"]) + "\n"


def _outline(ob) -> np.ndarray:
    if isinstance(ob, CircleObstacle):
        c = np.asarray(ob.center)
        return np.array([c - ob.radius, c + ob.radius])
    return ob.array


def footprint_polygon(vehicle, pose) -> np.ndarray:
    hl, hw = vehicle.length / 2.0, vehicle.width / 2.0
    c, s = math.cos(pose[2]), math.sin(pose[2])
    local = np.array([[hl, -hw], [hl, hw], [-hl, hw], [-hl, -hw]])
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.asarray(pose[:2], dtype=float)


def _inflation(scenario) -> float:
    r = scenario.planner.inflation
    return scenario.vehicle.circumradius if r is None else r


def draw(scenario, *, path=None, trajectory=None, poses=(), ghosts=(), end_obstacles=(), tracks=(),
         title: str | None = None) -> str:
    """Compose an overlay; every geometric argument is in the global frame.

    ``path`` and ``trajectory`` are ``(N, 2)`` polylines, ``poses`` are
    ``(x, y, heading)`` footprints to draw, ``ghosts`` are future-relative
    polygons and ``tracks`` are obstacle anchor traces.
    """
    v = scenario.vehicle
    r = _inflation(scenario)
    inflated = [inflate(ob, r) for ob in scenario.obstacles]
    start_pose = (v.position.x, v.position.y, v.heading)
    chunks = [np.array([v.position, scenario.goal]), footprint_polygon(v, start_pose)]
    chunks += [_outline(ob) for ob in inflated]
    chunks += [np.asarray(g, dtype=float) for g in ghosts]
    chunks += [_outline(ob) for ob in end_obstacles]
    for extra in (path, trajectory):
        if extra is not None and len(extra):
            chunks.append(np.asarray(extra, dtype=float))
    chunks += [np.asarray(t, dtype=float) for t in tracks if len(t)]
    chunks += [footprint_polygon(v, p) for p in poses]
    cv = _Canvas(np.vstack(chunks))

    for g in ghosts:
        cv.polygon(g, "ghost")
    for ob in scenario.obstacles:
        cv.shape(ob, "obstacle")
    for ob in inflated:
        cv.shape(ob, "inflated")
    for ob in end_obstacles:
        cv.shape(ob, "obstacle_end")
    for t in tracks:
        cv.polyline(t, "track")
    for ob in scenario.obstacles:
        if ob.id is not None:
            cv.text(_outline(ob).max(axis=0), str(ob.id))
    if path is not None:
        cv.polyline(path, "path")
    if trajectory is not None:
        cv.polyline(trajectory, "trajectory")
    cv.polygon(footprint_polygon(v, start_pose), "vehicle")
    for p in poses:
        cv.polygon(footprint_polygon(v, p), "vehicle")
    cv.circle(scenario.goal, v.width / 4.0, "goal")
    return cv.svg(title)


def plan_svg(scenario, scene, path) -> str:
    """Planned polyline with the scene's future-relative ghosts."""
    frame = scene.frame
    ghosts = [frame.point_out(f.polygon.array) for f in scene.future]
    xy = frame.point_out(path.xy()) if not path.empty else None
    return draw(scenario, path=xy, ghosts=ghosts, title=f"plan ({scene.config.mode})")


def log_svg(scenario, log, every: float | None = None) -> str:
    """Tracked trajectory, periodic footprints and obstacle motion of a run."""
    poses = np.asarray(log.poses, dtype=float).reshape(-1, 3)
    times = np.asarray(log.times, dtype=float)
    if every is None:
        every = max(log.duration / 8.0, 1e-9)
    marks = []
    next_t = every
    for t, p in zip(times[1:], poses[1:]):
        if t >= next_t - 1e-9:
            marks.append(tuple(p))
            next_t += every
    if len(poses) > 1 and (not marks or marks[-1] != tuple(poses[-1])):
        marks.append(tuple(poses[-1]))
    moving = [k for k, ob in enumerate(scenario.obstacles) if ob.velocity != (0.0, 0.0)]
    end = []
    if log.times:
        dt_end = log.times[-1] - log.times[0]
        end = [scenario.obstacles[k].translated((scenario.obstacles[k].velocity.vx * dt_end,
                                                 scenario.obstacles[k].velocity.vy * dt_end)) for k in moving]
    tracks = [np.array([row[k] for row in log.obstacle_positions]) for k in moving] if log.obstacle_positions else []
    first_path = None
    if log.replans:
        first_path = log.replans[0].global_path()
    title = f"simulate: {log.outcome}, length {log.path_length:.4f} m, {log.duration:.2f} s"
    return draw(scenario, path=first_path, trajectory=poses[:, :2], poses=marks, end_obstacles=end,
                tracks=tracks, title=title)
