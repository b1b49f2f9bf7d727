"""Frames, rotations and obstacle primitives.

All quantities are SI (meters, seconds, radians). Obstacles are immutable;
"moving" one means building a translated copy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence, Union

import numpy as np


class GeometryError(ValueError):
    """Raised for degenerate or invalid geometric input."""


class Point2(NamedTuple):
    x: float
    y: float


class Velocity2(NamedTuple):
    vx: float
    vy: float


ZERO_VELOCITY = Velocity2(0.0, 0.0)

# Vertex angles sharper than this make the miter join explode.
MIN_MITER_ANGLE = math.radians(5.0)


def normalize_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.fmod(theta, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    elif wrapped > math.pi:
        wrapped -= 2.0 * math.pi
    return wrapped


def to_frame(p, theta: float):
    """Express ``p`` in a frame whose x-axis is rotated by ``theta``.

    Works on a single point or an ``(..., 2)`` array of points.
    """
    c, s = math.cos(theta), math.sin(theta)
    arr = np.asarray(p, dtype=float)
    x = arr[..., 0] * c + arr[..., 1] * s
    y = -arr[..., 0] * s + arr[..., 1] * c
    if arr.ndim == 1:
        return Point2(float(x), float(y))
    return np.stack([x, y], axis=-1)


def from_frame(p, theta: float):
    """Inverse of :func:`to_frame`."""
    return to_frame(p, -theta)


def velocity_heading(v) -> float:
    """Direction of a velocity vector, in (-pi, pi]."""
    vx, vy = float(v[0]), float(v[1])
    if vx == 0.0 and vy == 0.0:
        raise GeometryError("zero velocity has no heading")
    return normalize_angle(math.atan2(vy, vx))


@dataclass(frozen=True)
class SegmentEdge:
    """Directed segment with right/left end points and a translation velocity."""

    q_r: Point2
    q_l: Point2
    velocity: Velocity2 = ZERO_VELOCITY

    def __post_init__(self):
        object.__setattr__(self, "q_r", Point2(*map(float, self.q_r)))
        object.__setattr__(self, "q_l", Point2(*map(float, self.q_l)))
        object.__setattr__(self, "velocity", Velocity2(*map(float, self.velocity)))
        if self.q_r == self.q_l:
            raise GeometryError(f"degenerate edge at {self.q_r}")


def _atan_slope(dy: float, dx: float) -> float:
    # single-argument arctan of dy/dx, continued to dx == 0
    if dx == 0.0:
        return math.copysign(math.pi / 2.0, dy)
    return math.atan(dy / dx)


def edge_normal_angle(e: SegmentEdge, outward: bool = True) -> float:
    """Angle of the axis normal to ``e``.

    With ``outward`` the axis points to the side where ``q_r`` is on the
    right when facing along it; for a counter-clockwise polygon with
    ``q_r = v[k]`` and ``q_l = v[k+1]`` that is the exterior. Without it the
    plain ``arctan(dy/dx) + pi/2`` convention is returned (direction is only
    defined modulo pi then).
    """
    dx = e.q_r.x - e.q_l.x
    dy = e.q_r.y - e.q_l.y
    if dx == 0.0 and dy == 0.0:
        raise GeometryError("degenerate edge")
    base = _atan_slope(dy, dx)
    if not outward:
        return normalize_angle(base + math.pi / 2.0)
    # sign(sign(dx) + 0.5) is +1 for dx >= 0 and -1 for dx < 0
    side = 1.0 if dx >= 0.0 else -1.0
    return normalize_angle(base + side * math.pi / 2.0)


def segment_props(e: SegmentEdge) -> tuple[Point2, float]:
    """Midpoint and length of an edge."""
    center = Point2((e.q_r.x + e.q_l.x) / 2.0, (e.q_r.y + e.q_l.y) / 2.0)
    length = math.hypot(e.q_r.x - e.q_l.x, e.q_r.y - e.q_l.y)
    return center, length


def signed_area(vertices) -> float:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _turns(v: np.ndarray) -> np.ndarray:
    # cross product of consecutive edges at each vertex k (edge k-1 -> edge k)
    e_in = v - np.roll(v, 1, axis=0)
    e_out = np.roll(v, -1, axis=0) - v
    return e_in[:, 0] * e_out[:, 1] - e_in[:, 1] * e_out[:, 0]


@dataclass(frozen=True)
class ConvexPolygonObstacle:
    """Strictly convex polygon translating at constant velocity.

    Vertices given clockwise are reordered counter-clockwise. ``inflation``
    records how much the shape has been grown by :func:`inflate`.
    """

    vertices: tuple
    velocity: Velocity2 = ZERO_VELOCITY
    id: str | None = None
    inflation: float = 0.0

    def __post_init__(self):
        verts = [Point2(float(x), float(y)) for x, y in self.vertices]
        if len(verts) < 3:
            raise GeometryError("a polygon needs at least 3 vertices")
        if len(set(verts)) != len(verts):
            raise GeometryError("polygon has repeated vertices")
        arr = np.array(verts)
        if not np.all(np.isfinite(arr)):
            raise GeometryError("polygon vertices must be finite")
        if signed_area(arr) < 0.0:
            verts = verts[::-1]
            arr = arr[::-1]
        turns = _turns(arr)
        bad = np.flatnonzero(turns <= 0.0)
        if bad.size:
            k = int(bad[0])
            raise GeometryError(f"polygon is not strictly convex: reflex or collinear vertex {k} at {tuple(verts[k])}")
        object.__setattr__(self, "vertices", tuple(verts))
        object.__setattr__(self, "velocity", Velocity2(*map(float, self.velocity)))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.vertices, dtype=float)

    def edges(self) -> list[SegmentEdge]:
        """Edges with ``q_r = v[k]``, ``q_l = v[k+1]`` (outward normals on the right)."""
        n = len(self.vertices)
        return [SegmentEdge(self.vertices[k], self.vertices[(k + 1) % n], self.velocity) for k in range(n)]

    @property
    def centroid(self) -> Point2:
        return Point2(*np.mean(self.array, axis=0))

    def translated(self, d) -> "ConvexPolygonObstacle":
        shifted = self.array + np.asarray(d, dtype=float)
        return replace(self, vertices=tuple(map(tuple, shifted)))

    def with_velocity(self, v) -> "ConvexPolygonObstacle":
        return replace(self, velocity=Velocity2(*v))

    def area(self) -> float:
        return signed_area(self.array)


@dataclass(frozen=True)
class CircleObstacle:
    center: Point2
    radius: float
    velocity: Velocity2 = ZERO_VELOCITY
    id: str | None = None
    inflation: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", Point2(*map(float, self.center)))
        object.__setattr__(self, "velocity", Velocity2(*map(float, self.velocity)))
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise GeometryError(f"circle radius must be positive, got {self.radius}")

    def translated(self, d) -> "CircleObstacle":
        return replace(self, center=Point2(self.center.x + float(d[0]), self.center.y + float(d[1])))

    def with_velocity(self, v) -> "CircleObstacle":
        return replace(self, velocity=Velocity2(*v))

    def to_polygon(self, k: int = 12) -> ConvexPolygonObstacle:
        """Regular k-gon circumscribing the circle (contains it)."""
        r = self.radius / math.cos(math.pi / k)
        ang = 2.0 * math.pi * np.arange(k) / k
        verts = np.stack([self.center.x + r * np.cos(ang), self.center.y + r * np.sin(ang)], axis=1)
        return ConvexPolygonObstacle(tuple(map(tuple, verts)), self.velocity, self.id, self.inflation)


Obstacle = Union[ConvexPolygonObstacle, CircleObstacle]


@dataclass(frozen=True)
class Rectangle:
    """Oriented rectangle; ``length`` runs along ``angle``."""

    center: Point2
    length: float
    width: float
    angle: float = 0.0

    def corners(self) -> np.ndarray:
        hl, hw = self.length / 2.0, self.width / 2.0
        local = np.array([[hl, -hw], [hl, hw], [-hl, hw], [-hl, -hw]])
        return from_frame(local, self.angle) + np.asarray(self.center, dtype=float)

    def to_polygon(self, velocity=ZERO_VELOCITY, id=None) -> ConvexPolygonObstacle:
        return ConvexPolygonObstacle(tuple(map(tuple, self.corners())), velocity, id)


@dataclass(frozen=True)
class VehicleFootprint:
    """Rectangular vehicle: pose in the global frame plus kinematic limits."""

    length: float
    width: float
    position: Point2 = Point2(0.0, 0.0)
    heading: float = 0.0
    speed: float = 0.0
    v_max: float = 1.0
    a_n_max: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "position", Point2(*map(float, self.position)))
        for name in ("length", "width", "v_max", "a_n_max"):
            if not getattr(self, name) > 0.0:
                raise GeometryError(f"vehicle {name} must be positive")
        if self.speed < 0.0 or self.speed > self.v_max * (1.0 + 1e-12):
            raise GeometryError("vehicle speed must lie in [0, v_max]")

    @property
    def velocity(self) -> Velocity2:
        return Velocity2(self.speed * math.cos(self.heading), self.speed * math.sin(self.heading))

    @property
    def circumradius(self) -> float:
        return 0.5 * math.hypot(self.length, self.width)

    def rectangle(self) -> Rectangle:
        return Rectangle(self.position, self.length, self.width, self.heading)


@dataclass(frozen=True)
class Frame:
    """A rotated, translated frame: ``rotation`` is its x-axis angle in the parent."""

    rotation: float = 0.0
    origin: Point2 = field(default=Point2(0.0, 0.0))

    def __post_init__(self):
        object.__setattr__(self, "rotation", normalize_angle(self.rotation))
        object.__setattr__(self, "origin", Point2(*map(float, self.origin)))

    def point_in(self, p):
        return to_frame(np.asarray(p, dtype=float) - np.asarray(self.origin), self.rotation)

    def point_out(self, p):
        out = from_frame(p, self.rotation)
        res = np.asarray(out) + np.asarray(self.origin)
        return Point2(*res) if res.ndim == 1 else res

    def vector_in(self, v):
        return to_frame(v, self.rotation)

    def vector_out(self, v):
        return from_frame(v, self.rotation)


def _line_intersection(p1, d1, p2, d2) -> np.ndarray:
    cross = d1[0] * d2[1] - d1[1] * d2[0]
    diff = p2 - p1
    s = (diff[0] * d2[1] - diff[1] * d2[0]) / cross
    return p1 + s * d1


def inflate(obstacle: Obstacle, r: float) -> Obstacle:
    """Grow an obstacle by ``r`` (configuration-obstacle construction).

    Circles gain ``r`` of radius. Polygon edges are pushed outward by ``r``
    and neighbouring offset lines are intersected (miter join).
    """
    if r < 0.0:
        raise GeometryError("inflation radius must be non-negative")
    if isinstance(obstacle, CircleObstacle):
        return replace(obstacle, radius=obstacle.radius + r, inflation=obstacle.inflation + r)
    if r == 0.0:
        return obstacle
    v = obstacle.array
    n = len(v)
    d = np.roll(v, -1, axis=0) - v
    d /= np.linalg.norm(d, axis=1)[:, None]
    normals = np.stack([d[:, 1], -d[:, 0]], axis=1)
    # interior angle at vertex k between edges k-1 and k
    cos_int = -np.einsum("ij,ij->i", np.roll(d, 1, axis=0), d)
    interior = np.arccos(np.clip(cos_int, -1.0, 1.0))
    if np.any(interior < MIN_MITER_ANGLE):
        k = int(np.argmin(interior))
        raise GeometryError(f"vertex {k} is too sharp to inflate ({math.degrees(interior[k]):.2f} deg); split the obstacle")
    offs = v + r * normals
    new = [_line_intersection(offs[k - 1], d[k - 1], offs[k], d[k]) for k in range(n)]
    return replace(obstacle, vertices=tuple(map(tuple, new)), inflation=obstacle.inflation + r)


def point_in_convex(points, vertices) -> np.ndarray:
    """Half-plane test: True where a point lies inside or on a CCW convex polygon."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    v = np.asarray(vertices, dtype=float)
    a = v
    b = np.roll(v, -1, axis=0)
    cross = (b[:, 0] - a[:, 0])[None, :] * (p[:, 1:2] - a[:, 1][None, :]) - (b[:, 1] - a[:, 1])[None, :] * (
        p[:, 0:1] - a[:, 0][None, :]
    )
    return np.all(cross >= 0.0, axis=1)


def convex_hull(points) -> np.ndarray:
    """Counter-clockwise hull (monotone chain), collinear points dropped."""
    pts = sorted(set(map(tuple, np.asarray(points, dtype=float))))
    if len(pts) < 3:
        return np.array(pts)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def polygons_overlap(a, b) -> bool:
    """Separating-axis test for two convex polygons (touching counts)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    for poly in (a, b):
        edges = np.roll(poly, -1, axis=0) - poly
        axes = np.stack([edges[:, 1], -edges[:, 0]], axis=1)
        pa = a @ axes.T
        pb = b @ axes.T
        if np.any(pa.max(axis=0) < pb.min(axis=0)) or np.any(pb.max(axis=0) < pa.min(axis=0)):
            return False
    return True


def circle_polygon_overlap(center, radius: float, vertices) -> bool:
    """True when a disk touches or intersects a convex polygon."""
    c = np.asarray(center, dtype=float)
    v = np.asarray(vertices, dtype=float)
    if point_in_convex(c, v)[0]:
        return True
    return bool(distance_to_polygon_boundary(c, v) <= radius)


def rectangles_hit(centers, headings, half_length: float, half_width: float, obstacle: Obstacle,
                   offsets=None) -> np.ndarray:
    """Which of N rectangle poses touch ``obstacle`` (shifted by ``offsets[i]`` for pose i).

    Vectorized separating-axis test; touching counts as a hit.
    """
    c = np.atleast_2d(np.asarray(centers, dtype=float))
    h = np.asarray(headings, dtype=float).reshape(-1)
    d = np.zeros_like(c) if offsets is None else np.atleast_2d(np.asarray(offsets, dtype=float))
    u = np.stack([np.cos(h), np.sin(h)], axis=1)
    n = np.stack([-np.sin(h), np.cos(h)], axis=1)
    if isinstance(obstacle, CircleObstacle):
        rel = np.asarray(obstacle.center) + d - c
        ex = np.maximum(np.abs(np.einsum("ij,ij->i", rel, u)) - half_length, 0.0)
        ey = np.maximum(np.abs(np.einsum("ij,ij->i", rel, n)) - half_width, 0.0)
        return ex * ex + ey * ey <= obstacle.radius**2
    poly = obstacle.array
    hit = np.ones(len(c), dtype=bool)
    # rectangle axes: polygon projections against the rectangle half-extent
    for axis, half in ((u, half_length), (n, half_width)):
        proj = np.einsum("imk,ik->im", poly[None, :, :] + d[:, None, :] - c[:, None, :], axis)
        hit &= (proj.min(axis=1) <= half) & (proj.max(axis=1) >= -half)
    # polygon edge normals: rectangle corners against the polygon's extent
    edges = np.roll(poly, -1, axis=0) - poly
    normals = np.stack([edges[:, 1], -edges[:, 0]], axis=1)
    pp = poly @ normals.T  # (M, M)
    lo, hi = pp.min(axis=0), pp.max(axis=0)
    shift = d @ normals.T  # (N, M)
    centre = c @ normals.T
    reach = half_length * np.abs(u @ normals.T) + half_width * np.abs(n @ normals.T)
    hit &= np.all((centre - reach <= hi + shift) & (centre + reach >= lo + shift), axis=1)
    return hit


def penetration_depth(points, obstacle: Obstacle) -> np.ndarray:
    """How far each point lies inside ``obstacle`` (negative outside).

    For polygons this is the smallest distance to an edge line, so outside
    it is a lower bound on the true distance, with the right sign.
    """
    p = np.atleast_2d(np.asarray(points, dtype=float))
    if isinstance(obstacle, CircleObstacle):
        return obstacle.radius - np.linalg.norm(p - np.asarray(obstacle.center), axis=1)
    v = obstacle.array
    d = np.roll(v, -1, axis=0) - v
    d /= np.linalg.norm(d, axis=1)[:, None]
    inward = np.stack([-d[:, 1], d[:, 0]], axis=1)  # CCW polygon
    dist = np.einsum("nmk,mk->nm", p[:, None, :] - v[None, :, :], inward)
    return dist.min(axis=1)


def distance_to_polygon_boundary(p, vertices) -> float:
    p = np.asarray(p, dtype=float)
    a = np.asarray(vertices, dtype=float)
    b = np.roll(a, -1, axis=0)
    ab = b - a
    t = np.clip(np.einsum("ij,ij->i", p - a, ab) / np.einsum("ij,ij->i", ab, ab), 0.0, 1.0)
    closest = a + t[:, None] * ab
    return float(np.min(np.linalg.norm(closest - p, axis=1)))


def obstacle_overlaps_polygon(obstacle: Obstacle, vertices) -> bool:
    if isinstance(obstacle, CircleObstacle):
        return circle_polygon_overlap(obstacle.center, obstacle.radius, vertices)
    return polygons_overlap(obstacle.array, vertices)


def relative_to(obstacle: Obstacle, frame: Frame, frame_velocity=ZERO_VELOCITY) -> Obstacle:
    """Re-express an obstacle (geometry and velocity) in a moving frame."""
    rel_v = Velocity2(*frame.vector_in(np.subtract(obstacle.velocity, frame_velocity)))
    if isinstance(obstacle, CircleObstacle):
        return replace(obstacle, center=Point2(*frame.point_in(obstacle.center)), velocity=rel_v)
    verts = frame.point_in(obstacle.array)
    return replace(obstacle, vertices=tuple(map(tuple, verts)), velocity=rel_v)


def as_points(seq: Sequence) -> np.ndarray:
    return np.asarray(seq, dtype=float).reshape(-1, 2)
