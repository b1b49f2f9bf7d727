"""Time-to-collision prediction for a rectangular vehicle among translating obstacles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    CircleObstacle,
    ConvexPolygonObstacle,
    Frame,
    Obstacle,
    Point2,
    SegmentEdge,
    VehicleFootprint,
    Velocity2,
    relative_to,
)
from .td import INF, td_obstacle, td_polygon, td_segment


@dataclass(frozen=True)
class RelativeScene:
    """Everything expressed in the vehicle frame, where the vehicle is at rest.

    ``footprint`` holds the vehicle corners (counter-clockwise) and
    ``border_points`` the sampled boundary, both centred on the origin.
    """

    border_points: np.ndarray
    footprint: np.ndarray
    obstacles: list
    ids: list = field(default_factory=list)

    def __post_init__(self):
        if not self.ids:
            object.__setattr__(self, "ids", [_obstacle_key(ob, k) for k, ob in enumerate(self.obstacles)])


@dataclass(frozen=True)
class TTCReport:
    ttc: float
    critical_point: Point2 | None
    per_obstacle: dict

    @property
    def collision_predicted(self) -> bool:
        return math.isfinite(self.ttc)


def _obstacle_key(ob: Obstacle, k: int) -> str:
    return ob.id if ob.id is not None else f"obstacle-{k}"


def vehicle_frame(vehicle: VehicleFootprint) -> Frame:
    return Frame(vehicle.heading, vehicle.position)


def footprint_corners(length: float, width: float) -> np.ndarray:
    hl, hw = length / 2.0, width / 2.0
    return np.array([[hl, -hw], [hl, hw], [-hl, hw], [-hl, -hw]])


def sample_border(footprint: VehicleFootprint, spacing: float | None = None) -> np.ndarray:
    """Points along the vehicle outline, no further apart than ``spacing``; corners always included.

    Each edge is split evenly, so halving a spacing that divides the edge
    lengths keeps every earlier sample.
    """
    if spacing is None:
        spacing = min(footprint.length, footprint.width) / 4.0
    if not spacing > 0.0:
        raise ValueError("border spacing must be positive")
    corners = footprint_corners(footprint.length, footprint.width)
    pts = []
    for k in range(4):
        a, b = corners[k], corners[(k + 1) % 4]
        n = max(1, math.ceil(np.linalg.norm(b - a) / spacing - 1e-12))
        s = np.arange(n)[:, None] / n
        pts.append(a + s * (b - a))
    return np.concatenate(pts)


def relativize(scenario, spacing: float | None = None) -> RelativeScene:
    """Move the scene into the vehicle frame with vehicle-relative obstacle velocities."""
    vehicle = scenario.vehicle
    frame = vehicle_frame(vehicle)
    obstacles = [relative_to(ob, frame, vehicle.velocity) for ob in scenario.obstacles]
    return RelativeScene(
        border_points=sample_border(vehicle, spacing),
        footprint=footprint_corners(vehicle.length, vehicle.width),
        obstacles=obstacles,
    )


def _vehicle_strike(ob: Obstacle, footprint: np.ndarray) -> tuple[float, np.ndarray | None]:
    """Earliest contact of an obstacle feature with the interior of a vehicle edge.

    Seen from the obstacle, the vehicle moves with the negated relative
    velocity, so the same TD fields apply with the roles swapped.
    """
    v = np.asarray(ob.velocity, dtype=float)
    if not v.any():
        return INF, None
    mover = ConvexPolygonObstacle(tuple(map(tuple, footprint)), Velocity2(*(-v)))
    if isinstance(ob, CircleObstacle):
        best, where = INF, None
        for edge in mover.edges():
            a, b = np.asarray(edge.q_r), np.asarray(edge.q_l)
            d = (b - a) / np.linalg.norm(b - a)
            normal = np.array([d[1], -d[0]])
            shifted = SegmentEdge(tuple(a + ob.radius * normal), tuple(b + ob.radius * normal), mover.velocity)
            t = td_segment(ob.center, shifted)
            if t < best:
                best = t
                where = np.asarray(ob.center) + v * t - ob.radius * normal
        return best, where
    verts = ob.array
    times = td_polygon(verts, mover)
    k = int(np.argmin(times))
    if not math.isfinite(times[k]):
        return INF, None
    return float(times[k]), verts[k] + v * times[k]


def predict_ttc(scene: RelativeScene, reciprocal: bool = True) -> TTCReport:
    """Time until the vehicle outline is first touched by any obstacle.

    The border-point term evaluates every obstacle's TD field at the sampled
    vehicle outline. With ``reciprocal`` the obstacle's own vertices (or, for
    circles, its offset contact line) are also checked against the vehicle
    edges, which makes the result exact for convex shapes regardless of the
    border sampling.
    """
    border = np.asarray(scene.border_points, dtype=float)
    per_obstacle = {}
    ttc, critical = INF, None
    for key, ob in zip(scene.ids, scene.obstacles):
        times = td_obstacle(border, ob)
        k = int(np.argmin(times))
        best, where = float(times[k]), border[k]
        if reciprocal:
            t_rec, w_rec = _vehicle_strike(ob, scene.footprint)
            if t_rec < best:
                best, where = t_rec, w_rec
        per_obstacle[key] = best
        if best < ttc:
            ttc, critical = best, Point2(*map(float, where))
    return TTCReport(ttc, critical, per_obstacle)
