"""Occupancy (zero/infinity) fields and the goal-seeking route field."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    CircleObstacle,
    ConvexPolygonObstacle,
    Obstacle,
    Rectangle,
    SegmentEdge,
    edge_normal_angle,
    segment_props,
    to_frame,
)

INF = math.inf


def _points(p):
    arr = np.asarray(p, dtype=float)
    return np.atleast_2d(arr), arr.ndim == 1


def _out(values, scalar):
    return float(values[0]) if scalar else values


def _zero_inf(inside: np.ndarray) -> np.ndarray:
    return np.where(inside, 0.0, INF)


def zinf_edge(p, edge: SegmentEdge):
    """0 on the inner side of an edge (boundary included), inf on the outer side.

    The edge must be oriented as a counter-clockwise polygon edge
    (``q_r = v[k]``, ``q_l = v[k+1]``) so that its normal points outward.
    """
    pts, scalar = _points(p)
    theta = edge_normal_angle(edge, outward=True)
    center, _ = segment_props(edge)
    x_edge = to_frame(center, theta).x
    x = to_frame(pts, theta)[:, 0]
    return _out(_zero_inf(x <= x_edge), scalar)


def zinf_polygon(p, poly: ConvexPolygonObstacle):
    """Max of the edge fields: 0 iff the point is inside or on the polygon."""
    pts, scalar = _points(p)
    out = np.zeros(len(pts))
    for edge in poly.edges():
        np.maximum(out, zinf_edge(pts, edge), out=out)
    return _out(out, scalar)


def zinf_rect(p, rect: Rectangle):
    pts, scalar = _points(p)
    local = to_frame(pts - np.asarray(rect.center, dtype=float), rect.angle)
    inside = (np.abs(local[:, 0]) <= rect.length / 2.0) & (np.abs(local[:, 1]) <= rect.width / 2.0)
    return _out(_zero_inf(inside), scalar)


def zinf_circle(p, circle: CircleObstacle):
    pts, scalar = _points(p)
    d2 = np.sum((pts - np.asarray(circle.center)) ** 2, axis=1)
    return _out(_zero_inf(circle.radius**2 - d2 >= 0.0), scalar)


def zinf_obstacle(p, obstacle: Obstacle):
    if isinstance(obstacle, CircleObstacle):
        return zinf_circle(p, obstacle)
    return zinf_polygon(p, obstacle)


@dataclass(frozen=True)
class RouteParams:
    """Route-field constants. ``delta`` is the goal-line bearing in the vehicle frame."""

    T_s: float = 4.0
    alpha: float = 1.1
    beta: float = 0.1
    gamma: float = 0.1
    delta: float = 0.0

    def __post_init__(self):
        if not self.T_s > 0.0:
            raise ValueError("T_s must be positive")
        if not (self.beta > 0.0 and self.gamma > 0.0 and self.beta < 1.0 < self.alpha and self.gamma < 1.0):
            raise ValueError("route parameters must satisfy 0 < beta, gamma < 1 < alpha")


def goal_lateral_offset(p, delta: float):
    """Signed distance from the goal line through the origin at bearing ``delta``."""
    pts, scalar = _points(p)
    y_g = pts[:, 1] * math.cos(delta) - pts[:, 0] * math.sin(delta)
    return _out(y_g, scalar)


def route_value(p, params: RouteParams):
    y_g = goal_lateral_offset(p, params.delta)
    return params.alpha * params.T_s - params.beta * np.abs(y_g) ** params.gamma


@dataclass(frozen=True)
class Feasibility:
    ok: bool
    margin: float

    def __bool__(self):
        return self.ok


def rf_feasibility(params: RouteParams, y_extent: float) -> Feasibility:
    """Check that the route field stays at or above ``T_s`` out to ``|y_g| = y_extent``."""
    worst = params.alpha * params.T_s - params.beta * abs(y_extent) ** params.gamma
    margin = worst - params.T_s
    return Feasibility(margin >= 0.0, margin)
