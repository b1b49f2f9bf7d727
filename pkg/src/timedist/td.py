"""Time Distance (TD) fields.

A TD value is the time until a moving object first reaches a location,
``+inf`` if it never does. Values are plain floats (``math.inf`` for the
infinite case); every function here accepts a single point or an ``(N, 2)``
array of points and returns a float or an ``(N,)`` array respectively.

The closed forms gate on signs (``2 (sign(.) + 1)^-1`` and ``Q^-1``
factors); those gates are written as explicit branches:

============================  =========
condition                     TD
============================  =========
gap == 0                      0
gap / v > 0                   gap / v
otherwise (incl. v == 0)      +inf
outside the swept band (Q=0)  +inf
============================  =========
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import (
    CircleObstacle,
    ConvexPolygonObstacle,
    Obstacle,
    Point2,
    SegmentEdge,
    edge_normal_angle,
    segment_props,
    to_frame,
    velocity_heading,
)

INF = math.inf


def _points(p):
    arr = np.asarray(p, dtype=float)
    return np.atleast_2d(arr), arr.ndim == 1


def _out(values: np.ndarray, scalar: bool):
    return float(values[0]) if scalar else values


def _gated_ratio(gap, v):
    """Vectorised 1-D TD: ``gap/v`` when positive, 0 when ``gap == 0``, else inf."""
    gap = np.asarray(gap, dtype=float)
    v = np.broadcast_to(np.asarray(v, dtype=float), gap.shape)
    out = np.full(gap.shape, INF)
    moving = v != 0.0
    ratio = np.divide(gap, v, out=np.full(gap.shape, -1.0), where=moving)
    out[moving & (ratio > 0.0)] = ratio[moving & (ratio > 0.0)]
    out[gap == 0.0] = 0.0
    return out


def td_point_1d(y_target, y_b, v_rel):
    """TD of a point at ``y_b`` moving at ``v_rel`` with respect to ``y_target`` on one axis."""
    res = _gated_ratio(np.subtract(y_target, y_b), v_rel)
    return float(res) if res.ndim == 0 else res


@dataclass(frozen=True)
class MovingSegmentTD:
    """Pre-computed constants for the TD field of one translating edge.

    Coordinates ``center0`` are the edge midpoint in the edge-normal frame
    (x'' along the normal, y'' along the edge).
    """

    theta_prime: float
    theta_dprime: float
    center0: Point2
    length: float
    v_xdprime: float
    v_ydprime: float
    band_slope: float
    parallel: bool

    @classmethod
    def from_edge(cls, edge: SegmentEdge, velocity=None, outward: bool = False) -> "MovingSegmentTD":
        v = edge.velocity if velocity is None else velocity
        theta_p = velocity_heading(v)
        theta_dp = edge_normal_angle(edge, outward=outward)
        center, length = segment_props(edge)
        c0 = to_frame(center, theta_dp)
        vdd = to_frame(v, theta_dp)
        speed = math.hypot(v[0], v[1])
        parallel = abs(vdd.x) <= 1e-12 * speed
        slope = INF if parallel else math.tan(theta_p - theta_dp)
        return cls(theta_p, theta_dp, c0, length, vdd.x, vdd.y, slope, parallel)

    def evaluate(self, p):
        pts, scalar = _points(p)
        local = to_frame(pts, self.theta_dprime)
        xdd, ydd = local[:, 0], local[:, 1]
        half = self.length / 2.0
        if self.parallel:
            # sweeps only its own supporting line: the front end point leads
            # rotation rounding leaves on-line points ~1e-16 off the line
            scale = np.maximum(1.0, np.abs(local).max(axis=1))
            on_line = np.abs(xdd - self.center0.x) <= 1e-12 * scale
            ahead = ydd - self.center0.y
            front = np.sign(self.v_ydprime) * half
            td = np.where(np.abs(ahead) <= half, 0.0, _gated_ratio(ahead - front, self.v_ydprime))
            return _out(np.where(on_line, td, INF), scalar)
        band_center = self.center0.y + (xdd - self.center0.x) * self.band_slope
        in_band = np.abs(ydd - band_center) <= half
        td = np.where(in_band, _gated_ratio(xdd - self.center0.x, self.v_xdprime), INF)
        return _out(td, scalar)

    __call__ = evaluate


def _stationary_segment(pts: np.ndarray, a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    ab = np.asarray(b, dtype=float) - a
    t = np.clip(((pts - a) @ ab) / (ab @ ab), 0.0, 1.0)
    dist = np.linalg.norm(pts - (a + t[:, None] * ab), axis=1)
    scale = max(1.0, float(np.abs(ab).max()))
    return np.where(dist <= 1e-12 * scale, 0.0, INF)


def td_segment(p, edge):
    """TD of a translating edge. ``edge`` is a :class:`SegmentEdge` or a context."""
    if isinstance(edge, MovingSegmentTD):
        return edge.evaluate(p)
    if edge.velocity == (0.0, 0.0):
        pts, scalar = _points(p)
        return _out(_stationary_segment(pts, edge.q_r, edge.q_l), scalar)
    return MovingSegmentTD.from_edge(edge).evaluate(p)


def circle_band_gate_imag(d, radius):
    """Band gate of a circle via the imaginary part of the chord root."""
    root = np.sqrt(np.asarray(radius * radius - np.square(d), dtype=complex))
    return 1.0 - np.abs(np.sign(root.imag))


def circle_band_gate_sign(d, radius):
    """Band gate of a circle via nested signs of ``R - |d|``."""
    return np.sign(np.sign(radius - np.abs(d)) + 1.0)


@dataclass(frozen=True)
class MovingCircleTD:
    """Constants for the TD field of a translating circle (``center0`` in the motion frame)."""

    theta_prime: float
    center0: Point2
    radius: float
    speed: float

    @classmethod
    def from_circle(cls, circle: CircleObstacle, velocity=None) -> "MovingCircleTD":
        v = circle.velocity if velocity is None else velocity
        theta = velocity_heading(v)
        return cls(theta, to_frame(circle.center, theta), circle.radius, math.hypot(v[0], v[1]))

    def evaluate(self, p, gate: Callable = circle_band_gate_sign):
        pts, scalar = _points(p)
        local = to_frame(pts, self.theta_prime)
        d = local[:, 1] - self.center0.y
        q = gate(d, self.radius)
        chord = np.sqrt(np.clip(self.radius**2 - d * d, 0.0, None))
        front = self.center0.x + chord
        td = np.where(q == 1.0, _gated_ratio(local[:, 0] - front, self.speed), INF)
        return _out(td, scalar)

    __call__ = evaluate


def td_circle(p, circle):
    """TD of a translating circle (:class:`CircleObstacle` or context)."""
    if isinstance(circle, MovingCircleTD):
        return circle.evaluate(p)
    if circle.velocity == (0.0, 0.0):
        pts, scalar = _points(p)
        dist = np.linalg.norm(pts - np.asarray(circle.center), axis=1)
        return _out(np.where(dist <= circle.radius, 0.0, INF), scalar)
    return MovingCircleTD.from_circle(circle).evaluate(p)


def td_polygon(p, polygon: ConvexPolygonObstacle):
    """Minimum edge TD of a rigidly translating convex polygon."""
    pts, scalar = _points(p)
    out = np.full(len(pts), INF)
    moving = polygon.velocity != (0.0, 0.0)
    for edge in polygon.edges():
        if moving:
            vals = MovingSegmentTD.from_edge(edge).evaluate(pts)
        else:
            vals = _stationary_segment(pts, edge.q_r, edge.q_l)
        np.minimum(out, vals, out=out)
    return _out(out, scalar)


def td_obstacle(p, obstacle: Obstacle):
    if isinstance(obstacle, CircleObstacle):
        return td_circle(p, obstacle)
    return td_polygon(p, obstacle)


def td_set(p, obstacles: Sequence[Obstacle]):
    """TD of a set of obstacles: pointwise minimum, ``+inf`` for the empty set."""
    pts, scalar = _points(p)
    out = np.full(len(pts), INF)
    for ob in obstacles:
        np.minimum(out, td_obstacle(pts, ob), out=out)
    return _out(out, scalar)


@dataclass(frozen=True)
class SectionProfile:
    """Field samples along one section line.

    ``goal_offset`` holds the signed distance of each sample from the goal
    line; when omitted the goal line is taken to cross the section at y = 0.
    """

    x: float
    y: np.ndarray
    td: np.ndarray
    goal_offset: np.ndarray | None = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        td = np.asarray(self.td, dtype=float)
        if y.ndim != 1 or y.shape != td.shape or y.size == 0:
            raise ValueError("section profile needs matching non-empty 1-D y and td arrays")
        if np.any(np.diff(y) <= 0.0):
            raise ValueError("section samples must be strictly increasing in y")
        if np.any(np.isnan(td)) or np.any(td < 0.0):
            raise ValueError("TD samples must be non-negative and not NaN")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "td", td)
        if self.goal_offset is not None:
            object.__setattr__(self, "goal_offset", np.asarray(self.goal_offset, dtype=float))


def closest_to_goal(profile: SectionProfile, candidates: np.ndarray) -> int:
    """Default tie rule: smallest ``|y_g|``, then smaller y."""
    off = profile.y if profile.goal_offset is None else profile.goal_offset
    keys = np.abs(off[candidates])
    best = candidates[keys == keys.min()]
    return int(best[0])  # y is increasing, so the first is the smaller y


def section_argmax(profile: SectionProfile, tie_rule: Callable = closest_to_goal) -> tuple[float, float]:
    """Safest location of a section: ``(t_P, y_P)`` with ``t_P`` the maximum sample."""
    t_p = profile.td.max()
    idx = tie_rule(profile, np.flatnonzero(profile.td == t_p))
    return float(t_p), float(profile.y[idx])
