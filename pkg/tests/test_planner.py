import math
from dataclasses import replace

import numpy as np
import pytest

from timedist.geometry import CircleObstacle, ConvexPolygonObstacle, VehicleFootprint, inflate, point_in_convex
from timedist.guidance import goal_lateral_offset
from timedist.planner import (
    REACHED_GOAL,
    SAFETY_CUTOFF,
    PlannerConfig,
    PlanningError,
    field_grid,
    future_relative_geometry,
    lateral_axis_time,
    plan_path,
    prepare_scene,
    section_tp,
)
from timedist.scenario import Scenario

CAR = VehicleFootprint(0.1, 0.08, speed=0.015, v_max=0.015, a_n_max=0.0133)


def box(x0, y0, x1, y1, v=(0.0, 0.0), oid=None):
    return ConvexPolygonObstacle(((x0, y0), (x1, y0), (x1, y1), (x0, y1)), v, oid)


def scenario(obstacles=(), goal=(0.6, 0.0), mode="static", vehicle=CAR, **planner):
    return Scenario(vehicle, goal, tuple(obstacles), planner=PlannerConfig(mode=mode, **planner))


def test_lateral_axis_time():
    assert lateral_axis_time(2.0, -1.0) == 2.0
    assert lateral_axis_time(2.0, 1.0) == math.inf
    assert lateral_axis_time(0.0, 0.0) == 0.0
    assert lateral_axis_time(-3.0, 1.5) == 2.0
    assert lateral_axis_time(1.0, 0.0) == math.inf


def test_future_geometry_stationary_obstacle():
    poly = box(1.0, -0.5, 2.0, 0.5)
    fut = future_relative_geometry(poly, (1.0, 0.0))
    np.testing.assert_allclose(sorted(map(tuple, fut.polygon.array)), sorted(map(tuple, poly.array)))
    assert fut.polygon.velocity == (-1.0, 0.0)


def test_future_geometry_single_vertex():
    poly = ConvexPolygonObstacle(((2.0, -1.0), (3.0, -1.0), (3.0, 0.0)), (0.0, 1.0))
    fut = future_relative_geometry(poly, (1.0, 0.0))
    k = [tuple(v) for v in poly.array].index((2.0, -1.0))
    assert fut.vertex_times[k] == pytest.approx(2.0)
    assert (2.0, 1.0) in [tuple(np.round(v, 12)) for v in fut.polygon.array]


def vertex_oracle(vertex, v_abs, v_vehicle, T_h, dt=1e-4):
    """Step the vertex in the vehicle frame until it reaches the lateral axis (x = 0)."""
    t = np.arange(0.0, T_h + dt, dt)
    x = vertex[0] + (v_abs[0] - v_vehicle[0]) * t
    hit = np.flatnonzero(vertex[0] * x <= 0.0)
    t_q = t[hit[0]] if hit.size else T_h
    return np.asarray(vertex) + t_q * np.asarray(v_abs), t_q


def test_future_geometry_crossing_obstacle_matches_kinematics():
    # an obstacle crossing the vehicle's path from the right, shown in the vehicle frame
    poly = ConvexPolygonObstacle(((0.8, -0.6), (1.0, -0.6), (1.05, -0.45), (0.85, -0.4)), (0.02, 0.15))
    v_vehicle = (0.15, 0.0)
    fut = future_relative_geometry(poly, v_vehicle, T_h=10.0)
    assert len(fut.polygon.vertices) == 4
    for k, vert in enumerate(poly.array):
        expected, t = vertex_oracle(vert, np.asarray(poly.velocity), v_vehicle, 10.0)
        assert fut.vertex_times[k] == pytest.approx(t, abs=1e-3)
        assert min(np.linalg.norm(fut.polygon.array - expected, axis=1)) < 1e-3
    # the square is sheared: its edges changed length
    assert not np.allclose(sorted(fut.lengths), sorted(np.linalg.norm(np.roll(poly.array, -1, 0) - poly.array, axis=1)))


def test_future_geometry_caps_at_horizon():
    poly = box(1.0, 1.0, 1.5, 1.5, v=(0.5, 0.0))  # outruns the vehicle
    fut = future_relative_geometry(poly, (0.2, 0.0), T_h=7.0)
    assert all(t == 7.0 for t in fut.vertex_times)
    np.testing.assert_allclose(fut.polygon.array.min(axis=0), (1.0 + 3.5, 1.0))


def test_obstacle_free_section():
    sc = scenario()
    scene = prepare_scene(sc)
    t_p, y_p = section_tp(0.3, scene)
    assert y_p == 0.0
    assert t_p == pytest.approx(sc.planner.alpha * sc.planner.T_s)


def test_fully_covered_section():
    sc = scenario([box(0.25, -2.0, 0.35, 2.0)], y_min=-1.0, y_max=1.0)
    assert section_tp(0.3, prepare_scene(sc)) == (0.0, 0.0)


def test_gap_section_matches_dense_oracle():
    r = CAR.circumradius
    walls = [box(0.28, -1.0, 0.32, -0.02 - r), box(0.28, 0.10 + r, 0.32, 1.0)]
    sc = scenario(walls, goal=(0.6, 0.3))
    scene = prepare_scene(sc)
    t_p, y_p = section_tp(0.3, scene)
    dense = np.arange(scene.y_min, scene.y_max, scene.dy / 100)
    pts = np.column_stack([np.full_like(dense, 0.3), dense])
    vals = scene.field(pts)
    best = vals.max()
    y_g = np.abs(goal_lateral_offset(pts, scene.delta))
    y_dense = dense[vals == best][np.argmin(y_g[vals == best])]
    assert -0.02 < y_p < 0.10
    assert abs(y_p - y_dense) <= scene.dy


def test_empty_world_path_on_goal_line():
    for goal in ((0.6, 0.0), (0.5, 0.3), (0.4, -0.45)):
        sc = scenario(goal=goal)
        path = plan_path(sc)
        assert path.terminated == REACHED_GOAL
        scene = prepare_scene(sc)
        y_g = goal_lateral_offset(path.points[:, :2], scene.delta)
        assert np.all(np.abs(y_g) <= 1e-9)
        assert path.points[-1, 0] == pytest.approx(scene.goal.x)
        np.testing.assert_allclose(scene.frame.point_out(path.points[-1, :2]), goal, atol=1e-12)
        assert np.all(np.diff(path.points[:, 0]) > 0) and path.points[0, 0] > 0


def test_path_threads_gap_in_wall():
    r = CAR.circumradius
    gap = 2.5 * r
    walls = [box(0.3, -1.0, 0.34, 0.1 - gap / 2), box(0.3, 0.1 + gap / 2, 0.34, 1.0)]
    sc = scenario(walls, goal=(0.7, 0.0))
    path = plan_path(sc)
    assert path.terminated == REACHED_GOAL
    inflated = [inflate(w, r) for w in walls]
    for x, y, _ in path.points:
        assert not any(point_in_convex((x, y), w.array)[0] for w in inflated)
    # the polyline crosses the wall's x-range inside the gap
    in_wall = path.points[(path.points[:, 0] >= 0.3 - r) & (path.points[:, 0] <= 0.34 + r)]
    assert len(in_wall) and np.all(np.abs(in_wall[:, 1] - 0.1) < gap / 2)


def test_dynamic_safety_cutoff():
    # a wide wall rushing at the vehicle: every section beyond it scores below T_s
    wall = box(0.5, -3.0, 0.6, 3.0, v=(-0.05, 0.0))
    sc = scenario([wall], goal=(1.2, 0.0), mode="dynamic", y_min=-1.0, y_max=1.0)
    path = plan_path(sc)
    assert path.terminated == SAFETY_CUTOFF
    scene = prepare_scene(sc)
    cut = path.points[-1, 0] if len(path) else 0.0
    t_next, _ = section_tp(cut + scene.dx, scene)
    assert t_next < sc.planner.T_s


def admissibility_check(sc):
    scene = prepare_scene(sc)
    path = plan_path(sc, scene=scene)
    vals = scene.field(path.points[:, :2])
    np.testing.assert_array_equal(vals, path.points[:, 2])
    assert np.all(sc.planner.admissible(path.points[:, 2]))
    if sc.planner.mode == "dynamic":
        assert np.all(path.points[:, 2] >= sc.planner.T_s)
        for ob in scene.occupancy:
            assert not np.any(point_in_convex(path.points[:, :2], ob.array))
    return path


def test_admissibility_static_and_dynamic():
    rng = np.random.default_rng(0)
    for _ in range(10):
        obs = []
        for k in range(3):
            c = rng.uniform([0.2, -0.3], [0.6, 0.3])
            obs.append(box(*(c - 0.03), *(c + 0.03), v=tuple(rng.uniform(-0.01, 0.01, 2))))
        admissibility_check(scenario([replace(o, velocity=(0.0, 0.0)) for o in obs], goal=(0.8, 0.1)))
        admissibility_check(scenario(obs, goal=(0.8, 0.1), mode="dynamic"))


def test_static_dynamic_consistency_at_rest():
    still = replace(CAR, speed=0.0)
    obs = [box(0.2, -0.1, 0.26, 0.02), box(0.4, 0.0, 0.45, 0.12)]
    s = plan_path(scenario(obs, goal=(0.7, 0.05), vehicle=still))
    d_scene = prepare_scene(scenario(obs, goal=(0.7, 0.05), vehicle=still, mode="dynamic"))
    for fut, ob in zip(d_scene.future, obs):
        np.testing.assert_allclose(sorted(map(tuple, fut.polygon.array)),
                                   sorted(map(tuple, inflate(ob, still.circumradius).array)), atol=1e-15)
    d = plan_path(None, scene=d_scene)
    keep = s.points[:, 2] >= 4.0
    n = min(len(d), int(np.argmin(keep)) if not keep.all() else len(s))
    np.testing.assert_array_equal(d.points[:n, :2], s.points[:n, :2])


def test_deterministic():
    obs = [box(0.2, -0.1, 0.26, 0.02, v=(0.0, 0.01)), box(0.4, 0.0, 0.45, 0.12, v=(-0.01, 0.0))]
    a = plan_path(scenario(obs, mode="dynamic"))
    b = plan_path(scenario(obs, mode="dynamic"))
    assert a.points.tobytes() == b.points.tobytes()


def test_dynamic_rejects_circles_and_infeasible_route():
    with pytest.raises(PlanningError, match="circle"):
        plan_path(scenario([CircleObstacle((0.3, 0.0), 0.05)], mode="dynamic"))
    with pytest.raises(PlanningError, match="route field"):
        plan_path(scenario(mode="dynamic", alpha=1.0001, beta=0.9, gamma=0.9))


def test_goal_behind_vehicle_gives_empty_path():
    path = plan_path(scenario(goal=(-0.5, 0.1)))
    assert path.empty


def test_field_grid_shape():
    scene = prepare_scene(scenario([box(0.2, -0.1, 0.26, 0.02)]))
    xs, ys, vals = field_grid(scene)
    assert vals.shape == (len(xs), len(ys))
    assert vals.min() == 0.0 and np.isfinite(vals).all()


def test_config_validation():
    with pytest.raises(ValueError):
        PlannerConfig(mode="other")
    with pytest.raises(ValueError):
        PlannerConfig(dx=0.0)
    with pytest.raises(ValueError):
        PlannerConfig(y_min=1.0, y_max=0.0)
    with pytest.raises(ValueError):
        PlannerConfig(T_h=3.0)
