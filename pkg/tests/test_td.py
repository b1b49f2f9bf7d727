import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from timedist.geometry import CircleObstacle, ConvexPolygonObstacle, SegmentEdge, from_frame
from timedist.oracle import OracleConfig, oracle_td
from timedist.td import (
    INF,
    MovingCircleTD,
    MovingSegmentTD,
    SectionProfile,
    circle_band_gate_imag,
    circle_band_gate_sign,
    section_argmax,
    td_circle,
    td_obstacle,
    td_point_1d,
    td_polygon,
    td_segment,
    td_set,
)
from scenes import blob

UNIT_SQUARE = ((4.5, -0.5), (5.5, -0.5), (5.5, 0.5), (4.5, 0.5))
FAST = OracleConfig(dt=1e-3, horizon=30.0)


def random_polygon(rng, velocity=True):
    v = rng.uniform(-2, 2, 2) if velocity else (0.0, 0.0)
    return ConvexPolygonObstacle(blob(rng, rng.uniform(-3, 3, 2), rng.uniform(0.3, 1.5)), v)


def test_td_point_1d():
    assert td_point_1d(5, 2, 1) == 3.0
    assert td_point_1d(5, 2, -1) == INF
    assert td_point_1d(2, 2, 0) == 0.0
    assert td_point_1d(5, 2, 0) == INF
    np.testing.assert_array_equal(td_point_1d(np.array([5.0, -1.0]), 2.0, 1.0), [3.0, INF])


def test_td_segment_examples():
    edge = SegmentEdge((0, -1), (0, 1), (1, 0))
    assert td_segment((3, 0), edge) == pytest.approx(3.0)
    assert td_segment((3, 1.5), edge) == INF
    assert td_segment((3, 1.0), edge) == pytest.approx(3.0)  # band edge counts as inside
    sheared = SegmentEdge((0, -1), (0, 1), (1, 0.5))
    got = td_segment((4, 2), sheared)
    assert math.isfinite(got)
    assert abs(got - oracle_td((4, 2), sheared, OracleConfig(dt=1e-4, horizon=10))) <= 2e-4


def test_td_segment_context_reuse():
    edge = SegmentEdge((0, -1), (0, 1), (1, 0.5))
    ctx = MovingSegmentTD.from_edge(edge)
    pts = np.random.default_rng(0).uniform(-5, 5, (50, 2))
    np.testing.assert_array_equal(td_segment(pts, ctx), td_segment(pts, edge))
    assert ctx.band_slope == pytest.approx(math.tan(ctx.theta_prime - ctx.theta_dprime))


def test_td_segment_parallel_motion():
    edge = SegmentEdge((0, 0), (1, 0), (1, 0))
    assert td_segment((3, 0), edge) == pytest.approx(2.0)
    assert td_segment((0.5, 0), edge) == 0.0
    assert td_segment((3, 0.1), edge) == INF
    assert td_segment((-1, 0), edge) == INF


def test_td_stationary_segment_and_circle():
    edge = SegmentEdge((0, 0), (1, 0))
    assert td_segment((0.5, 0.0), edge) == 0.0
    assert td_segment((0.5, 0.1), edge) == INF
    c = CircleObstacle((0, 0), 1.0)
    assert td_circle((1.0, 0.0), c) == 0.0
    assert td_circle((1.1, 0.0), c) == INF


def test_td_polygon_examples():
    sq = ConvexPolygonObstacle(UNIT_SQUARE, (-1, 0))
    assert td_polygon((0, 0), sq) == pytest.approx(4.5)
    assert td_polygon((0, 3), sq) == INF


def test_td_circle_examples():
    c = CircleObstacle((5, 0), 1.0, (-1, 0))
    assert td_circle((0, 0), c) == pytest.approx(4.0)
    assert td_circle((0, 0.5), c) == pytest.approx(5 - math.sqrt(0.75), abs=1e-12)
    assert abs(td_circle((0, 0.5), c) - oracle_td((0, 0.5), c, OracleConfig(dt=1e-4, horizon=10))) <= 2e-4
    assert td_circle((0, 1.5), c) == INF


def test_td_set_examples():
    assert td_set((0, 0), []) == INF
    c = CircleObstacle((5, 0), 1.0, (-1, 0))
    sq = ConvexPolygonObstacle(UNIT_SQUARE, (-1, 0))
    assert td_set((0, 0), [c, sq]) == pytest.approx(4.0)
    rng = np.random.default_rng(1)
    obs = [random_polygon(rng) for _ in range(3)] + [CircleObstacle(rng.uniform(-3, 3, 2), 0.5, (1, -1)) for _ in range(2)]
    pts = rng.uniform(-6, 6, (300, 2))
    expected = np.min([td_obstacle(pts, ob) for ob in obs], axis=0)
    np.testing.assert_array_equal(td_set(pts, obs), expected)


def test_random_cases_match_oracle():
    rng = np.random.default_rng(2)
    for _ in range(40):
        poly = random_polygon(rng)
        circ = CircleObstacle(rng.uniform(-3, 3, 2), rng.uniform(0.2, 1.0), rng.uniform(-2, 2, 2))
        edge = SegmentEdge(rng.uniform(-2, 2, 2), rng.uniform(-2, 2, 2), rng.uniform(-2, 2, 2))
        p = rng.uniform(-6, 6, 2)
        # keep the query outside the current footprint (no interior guarantee)
        if td_obstacle(p, poly.with_velocity((0, 0))) == 0.0 or np.hypot(*(p - circ.center)) <= circ.radius:
            continue
        for ob, f in ((poly, td_polygon), (circ, td_circle), (edge, td_segment)):
            got, ref = f(p, ob), oracle_td(p, ob, FAST)
            if math.isinf(ref):
                assert math.isinf(got) or got > FAST.horizon - 2 * FAST.dt
            else:
                assert got == pytest.approx(ref, abs=2 * FAST.dt)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.1, 10.0))
def test_velocity_scaling(seed, k):
    rng = np.random.default_rng(seed)
    poly = random_polygon(rng)
    circ = CircleObstacle(rng.uniform(-3, 3, 2), 0.7, rng.uniform(-2, 2, 2))
    pts = rng.uniform(-6, 6, (100, 2))
    for ob in (poly, circ):
        base = td_obstacle(pts, ob)
        scaled = td_obstacle(pts, ob.with_velocity(np.asarray(ob.velocity) * k))
        fin = np.isfinite(base)
        assert np.array_equal(np.isinf(base), np.isinf(scaled))
        np.testing.assert_allclose(scaled[fin], base[fin] / k, rtol=1e-9, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.floats(-math.pi, math.pi), st.floats(-5, 5), st.floats(-5, 5))
def test_rigid_motion_equivariance(seed, phi, tx, ty):
    rng = np.random.default_rng(seed)
    poly = random_polygon(rng)
    circ = CircleObstacle(rng.uniform(-3, 3, 2), 0.7, rng.uniform(-2, 2, 2))
    pts = rng.uniform(-6, 6, (100, 2))
    shift = np.array([tx, ty])

    def move(p):
        return from_frame(p, phi) + shift

    moved_poly = ConvexPolygonObstacle(tuple(map(tuple, move(poly.array))), tuple(from_frame(poly.velocity, phi)))
    moved_circ = CircleObstacle(move(np.asarray(circ.center)), circ.radius, tuple(from_frame(circ.velocity, phi)))
    for ob, moved in ((poly, moved_poly), (circ, moved_circ)):
        a = td_obstacle(pts, ob)
        b = td_obstacle(move(pts), moved)
        # points grazing a band edge may flip under rounding; they are rare
        same = np.isinf(a) == np.isinf(b)
        assert same.mean() > 0.97
        both = np.isfinite(a) & np.isfinite(b)
        np.testing.assert_allclose(a[both], b[both], atol=1e-9, rtol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_codomain_and_polygon_bound(seed):
    rng = np.random.default_rng(seed)
    poly = random_polygon(rng, velocity=bool(rng.integers(0, 4)))
    pts = rng.uniform(-6, 6, (200, 2))
    vals = td_polygon(pts, poly)
    assert not np.any(np.isnan(vals)) and np.all(vals >= 0.0)
    for edge in poly.edges():
        assert np.all(vals <= td_segment(pts, edge))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_td_set_monotone(seed):
    rng = np.random.default_rng(seed)
    obs = [random_polygon(rng) for _ in range(3)]
    pts = rng.uniform(-6, 6, (200, 2))
    before = td_set(pts, obs[:2])
    assert np.all(td_set(pts, obs) <= before)


def test_circle_gate_forms_agree():
    rng = np.random.default_rng(3)
    for _ in range(5):
        c = CircleObstacle(rng.uniform(-2, 2, 2), rng.uniform(0.2, 2.0), rng.uniform(-2, 2, 2))
        ctx = MovingCircleTD.from_circle(c)
        g = np.linspace(-5, 5, 100)
        pts = np.array(np.meshgrid(g, g)).reshape(2, -1).T
        local_d = (pts @ np.array([-math.sin(ctx.theta_prime), math.cos(ctx.theta_prime)])) - ctx.center0.y
        np.testing.assert_array_equal(circle_band_gate_imag(local_d, c.radius), circle_band_gate_sign(local_d, c.radius))
        np.testing.assert_array_equal(ctx.evaluate(pts, circle_band_gate_imag), ctx.evaluate(pts, circle_band_gate_sign))
    edge = np.array([-1.0, 1.0])
    np.testing.assert_array_equal(circle_band_gate_imag(edge, 1.0), [1.0, 1.0])
    np.testing.assert_array_equal(circle_band_gate_sign(edge, 1.0), [1.0, 1.0])


def test_section_argmax_examples():
    y = np.array([0.0, 0.6, 1.2, 1.8])
    assert section_argmax(SectionProfile(0.0, y, np.array([1.0, 2.0, 6.0, 3.0]))) == (6.0, 1.2)
    y = np.linspace(-1, 1, 21)
    t, yp = section_argmax(SectionProfile(0.0, y, np.full(21, INF)))
    assert t == INF and yp == pytest.approx(0.0, abs=1e-12)
    # ties broken toward the goal line, then toward smaller y
    off = np.array([0.3, -0.2, 0.2, 0.5])
    assert section_argmax(SectionProfile(0.0, np.arange(4.0), np.full(4, 5.0), off)) == (5.0, 1.0)


def test_section_profile_validation():
    with pytest.raises(ValueError):
        SectionProfile(0.0, np.array([0.0, 0.0]), np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        SectionProfile(0.0, np.array([0.0, 1.0]), np.array([1.0, -1.0]))
    with pytest.raises(ValueError):
        SectionProfile(0.0, np.array([0.0, 1.0]), np.array([1.0, np.nan]))


def four_line_profile(y):
    # four points sliding along the section: two approach from below, two from above
    movers = [(-3.0, 1.0), (-1.0, 0.4), (8.0, -0.8), (11.0, -1.5)]
    return np.min([td_point_1d(y, yb, v) for yb, v in movers], axis=0)


def test_section_argmax_matches_dense_sampling():
    coarse = np.arange(0.0, 6.0 + 1e-9, 0.01)
    dense = np.arange(0.0, 6.0 + 1e-9, 1e-4)
    _, y_c = section_argmax(SectionProfile(0.0, coarse, four_line_profile(coarse)))
    _, y_d = section_argmax(SectionProfile(0.0, dense, four_line_profile(dense)))
    assert abs(y_c - y_d) <= 0.01
