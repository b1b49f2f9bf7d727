"""Slow, obviously-correct references: time stepping and grid search.

Nothing here uses the closed-form TD fields; these routines step time (or
space) and test containment directly, so they can check the fast paths.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .geometry import CircleObstacle, ConvexPolygonObstacle, SegmentEdge, inflate

INF = math.inf


@dataclass(frozen=True)
class OracleConfig:
    dt: float = 1e-4
    horizon: float = 50.0
    refine: int = 1
    chunk: int = 20_000

    def __post_init__(self):
        if not (self.dt > 0.0 and self.horizon > 0.0 and self.refine >= 1):
            raise ValueError("oracle needs dt > 0, horizon > 0, refine >= 1")


def _time_chunks(cfg: OracleConfig):
    n = int(math.floor(cfg.horizon / cfg.dt + 1e-9)) + 1
    for start in range(0, n, cfg.chunk):
        k = np.arange(start, min(n, start + cfg.chunk))
        yield k, k * cfg.dt


def _first(hit: np.ndarray, times: np.ndarray):
    idx = np.flatnonzero(hit)
    return float(times[idx[0]]) if idx.size else None


def _inside_convex_xy(qx: np.ndarray, qy: np.ndarray, verts: np.ndarray) -> np.ndarray:
    # query coordinates against a fixed CCW polygon: left of (or on) every edge
    a = verts
    b = np.roll(verts, -1, axis=0)
    ok = np.ones(len(qx), dtype=bool)
    for k in range(len(a)):
        cross = (b[k, 0] - a[k, 0]) * (qy - a[k, 1]) - (b[k, 1] - a[k, 1]) * (qx - a[k, 0])
        ok &= cross >= 0.0
    return ok


def _inside_convex(q: np.ndarray, verts: np.ndarray) -> np.ndarray:
    return _inside_convex_xy(q[:, 0], q[:, 1], verts)


def oracle_td(point, obstacle, cfg: OracleConfig = OracleConfig()) -> float:
    """First sampled time at which the moving obstacle covers ``point``.

    Polygons and circles use a containment test at each step. A bare
    :class:`SegmentEdge` has no area, so a hit is registered at the end of a
    step whose swept parallelogram contains the point.
    """
    p = np.asarray(point, dtype=float)
    v = np.asarray(obstacle.velocity, dtype=float)
    for _, t in _time_chunks(cfg):
        if isinstance(obstacle, CircleObstacle):
            dx = obstacle.center[0] + t * v[0] - p[0]
            dy = obstacle.center[1] + t * v[1] - p[1]
            hit = dx * dx + dy * dy <= obstacle.radius**2
        elif isinstance(obstacle, ConvexPolygonObstacle):
            # point relative to the obstacle's rest frame
            hit = _inside_convex_xy(p[0] - t * v[0], p[1] - t * v[1], obstacle.array)
        elif isinstance(obstacle, SegmentEdge):
            hit = _segment_sweep_hit(p, obstacle, t, cfg.dt)
        else:
            raise TypeError(f"unsupported obstacle {type(obstacle).__name__}")
        first = _first(hit, t)
        if first is not None:
            return first
    return INF


def _segment_sweep_hit(p, edge: SegmentEdge, t, dt):
    a = np.asarray(edge.q_r, dtype=float)
    ab = np.asarray(edge.q_l, dtype=float) - a
    v = np.asarray(edge.velocity, dtype=float)
    # at t = 0 the point can only be hit by lying on the segment
    rel0 = p - a
    cross0 = ab[0] * rel0[1] - ab[1] * rel0[0]
    u0 = rel0 @ ab / (ab @ ab)
    step = v * dt
    det = ab[0] * step[1] - ab[1] * step[0]
    if det == 0.0:
        # moving along its own line: covered once the point lies on the segment
        q = p - a - t[:, None] * v
        cross = ab[0] * q[:, 1] - ab[1] * q[:, 0]
        u = q @ ab / (ab @ ab)
        return (np.abs(cross) <= 1e-12) & (u >= 0.0) & (u <= 1.0)
    # q = p - a - v t_{k-1} = alpha ab + beta v dt, alpha, beta in [0, 1]
    back = t - dt
    qx = rel0[0] - back * v[0]
    qy = rel0[1] - back * v[1]
    alpha = (qx * step[1] - qy * step[0]) / det
    beta = (ab[0] * qy - ab[1] * qx) / det
    hit = (alpha >= 0.0) & (alpha <= 1.0) & (beta >= 0.0) & (beta <= 1.0)
    if t[0] == 0.0:
        hit[0] = abs(cross0) <= 1e-12 and 0.0 <= u0 <= 1.0
    return hit


def oracle_ttc(scene, cfg: OracleConfig = OracleConfig(dt=1e-3, horizon=30.0)) -> float:
    """First sampled time the vehicle rectangle overlaps an obstacle (separating axes)."""
    fp = np.asarray(scene.footprint, dtype=float)
    hl = float(np.max(np.abs(fp[:, 0])))
    hw = float(np.max(np.abs(fp[:, 1])))
    best = INF
    for ob in scene.obstacles:
        v = np.asarray(ob.velocity, dtype=float)
        for _, t in _time_chunks(cfg):
            if best <= t[0]:
                break
            if isinstance(ob, CircleObstacle):
                c = np.asarray(ob.center) + t[:, None] * v
                dx = np.maximum(np.abs(c[:, 0]) - hl, 0.0)
                dy = np.maximum(np.abs(c[:, 1]) - hw, 0.0)
                hit = dx * dx + dy * dy <= ob.radius**2
            else:
                hit = _sat_overlap(fp, ob.array, v, t)
            first = _first(hit, t)
            if first is not None:
                best = min(best, first)
                break
    return best


def _sat_overlap(fixed: np.ndarray, moving: np.ndarray, v: np.ndarray, t: np.ndarray) -> np.ndarray:
    axes = []
    for poly in (fixed, moving):
        e = np.roll(poly, -1, axis=0) - poly
        axes.extend(np.stack([e[:, 1], -e[:, 0]], axis=1))
    ok = np.ones(len(t), dtype=bool)
    for ax in axes:
        f = fixed @ ax
        m = moving @ ax
        shift = (v @ ax) * t
        ok &= (m.min() + shift <= f.max()) & (f.min() <= m.max() + shift)
    return ok


def _occupied(points: np.ndarray, obstacles) -> np.ndarray:
    occ = np.zeros(len(points), dtype=bool)
    for ob in obstacles:
        if isinstance(ob, CircleObstacle):
            occ |= np.sum((points - np.asarray(ob.center)) ** 2, axis=1) <= ob.radius**2
        else:
            occ |= _inside_convex(points, ob.array)
    return occ


@dataclass(frozen=True)
class AStarResult:
    length: float
    path: np.ndarray

    @property
    def blocked(self) -> bool:
        return not math.isfinite(self.length)


def grid_astar(scenario, cell: float, inflation: float | None = None, margin: float | None = None) -> AStarResult:
    """Shortest 8-connected grid path between the vehicle position and the goal.

    Obstacles are inflated like the planner's configuration obstacles and
    rasterised at cell centres. Diagonal moves cost ``sqrt(2) * cell`` and may
    not cut an occupied corner. ``length`` is ``inf`` when the goal is walled off.
    """
    if not cell > 0.0:
        raise ValueError("cell must be positive")
    r = scenario.vehicle.circumradius if inflation is None else inflation
    obstacles = [inflate(ob, r) for ob in scenario.obstacles]
    start = np.asarray(scenario.vehicle.position, dtype=float)
    goal = np.asarray(scenario.goal, dtype=float)
    pts = [start, goal]
    for ob in obstacles:
        if isinstance(ob, CircleObstacle):
            c = np.asarray(ob.center)
            pts.extend([c - ob.radius, c + ob.radius])
        else:
            pts.extend(ob.array)
    pts = np.array(pts)
    pad = margin if margin is not None else max(4.0 * r, 5.0 * cell)
    lo = pts.min(axis=0) - pad
    hi = pts.max(axis=0) + pad
    nx = int(math.ceil((hi[0] - lo[0]) / cell)) + 1
    ny = int(math.ceil((hi[1] - lo[1]) / cell)) + 1
    gx, gy = np.meshgrid(lo[0] + cell * np.arange(nx), lo[1] + cell * np.arange(ny), indexing="ij")
    occ = _occupied(np.column_stack([gx.ravel(), gy.ravel()]), obstacles).reshape(nx, ny)

    def to_cell(p):
        return tuple(np.round((p - lo) / cell).astype(int))

    s, g = to_cell(start), to_cell(goal)
    if occ[s]:
        raise ValueError("start lies inside an inflated obstacle")
    if occ[g]:
        raise ValueError("goal lies inside an inflated obstacle")

    diag = math.sqrt(2.0)

    def h(c):
        dx, dy = abs(c[0] - g[0]), abs(c[1] - g[1])
        return (max(dx, dy) - min(dx, dy)) + diag * min(dx, dy)

    moves = [(1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
             (1, 1, diag), (1, -1, diag), (-1, 1, diag), (-1, -1, diag)]
    cost = {s: 0.0}
    parent = {s: None}
    heap = [(h(s), 0.0, s)]
    closed = set()
    while heap:
        _, c_cost, cur = heapq.heappop(heap)
        if cur in closed:
            continue
        if cur == g:
            break
        closed.add(cur)
        for dx, dy, w in moves:
            nxt = (cur[0] + dx, cur[1] + dy)
            if not (0 <= nxt[0] < nx and 0 <= nxt[1] < ny) or occ[nxt]:
                continue
            if dx and dy and (occ[cur[0] + dx, cur[1]] or occ[cur[0], cur[1] + dy]):
                continue
            new = c_cost + w
            if new < cost.get(nxt, INF):
                cost[nxt] = new
                parent[nxt] = cur
                heapq.heappush(heap, (new + h(nxt), new, nxt))
    if g not in cost:
        return AStarResult(INF, np.empty((0, 2)))
    cells = []
    c = g
    while c is not None:
        cells.append(c)
        c = parent[c]
    path = lo + cell * np.array(cells[::-1], dtype=float)
    return AStarResult(cost[g] * cell, path)
