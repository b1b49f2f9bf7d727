import math

import numpy as np
import pytest

from timedist.collision import predict_ttc, relativize, sample_border
from timedist.geometry import CircleObstacle, ConvexPolygonObstacle, VehicleFootprint
from timedist.oracle import OracleConfig, oracle_ttc
from timedist.scenario import Scenario
from scenes import ttc_scene

CAR = VehicleFootprint(0.1, 0.08)


def square(cx, cy, half=0.5, v=(0.0, 0.0), oid=None):
    return ConvexPolygonObstacle(((cx - half, cy - half), (cx + half, cy - half), (cx + half, cy + half), (cx - half, cy + half)), v, oid)


def test_relativize_frames_and_velocities():
    v = VehicleFootprint(0.1, 0.08, (0.0, 0.0), 0.0, 0.5, 1.0)
    same = CircleObstacle((2.0, 1.0), 0.2, v.velocity)
    rs = relativize(Scenario(v, (5.0, 0.0), (same,)))
    assert rs.obstacles[0].velocity == (0.0, 0.0)
    assert rs.obstacles[0].center == (2.0, 1.0)
    turned = VehicleFootprint(0.1, 0.08, (0.0, 0.0), math.pi / 2)
    rs = relativize(Scenario(turned, (5.0, 0.0), (CircleObstacle((0.0, 5.0), 0.2),)))
    np.testing.assert_allclose(rs.obstacles[0].center, (5.0, 0.0), atol=1e-12)


def test_sample_border_corners_only():
    pts = sample_border(CAR, spacing=2 * (0.1 + 0.08))
    assert len(pts) == 4
    np.testing.assert_allclose(sorted(map(tuple, pts)), sorted([(0.05, 0.04), (0.05, -0.04), (-0.05, 0.04), (-0.05, -0.04)]))


def test_sample_border_spacing_and_corners():
    for spacing in (0.01, 0.013, 0.03, 0.07):
        pts = sample_border(CAR, spacing)
        gaps = np.linalg.norm(np.diff(np.vstack([pts, pts[:1]]), axis=0), axis=1)
        assert gaps.max() <= spacing + 1e-12
        for corner in [(0.05, 0.04), (0.05, -0.04), (-0.05, 0.04), (-0.05, -0.04)]:
            assert np.min(np.linalg.norm(pts - corner, axis=1)) < 1e-12
    with pytest.raises(ValueError):
        sample_border(CAR, 0.0)


def test_head_on_square():
    car = VehicleFootprint(1.0, 0.6)
    sq = square(0.5 + 4.5 + 0.5, 0.0, v=(-1.0, 0.0), oid="sq")
    report = predict_ttc(relativize(Scenario(car, (20.0, 0.0), (sq,))))
    assert report.ttc == pytest.approx(4.5)
    assert report.per_obstacle == {"sq": pytest.approx(4.5)}
    assert report.critical_point.x == pytest.approx(0.5)


def test_parallel_miss():
    car = VehicleFootprint(1.0, 0.6, speed=1.0, v_max=1.0)
    sq = square(3.0, 2.0, half=0.3, v=(1.0, 0.0))
    report = predict_ttc(relativize(Scenario(car, (20.0, 0.0), (sq,))))
    assert report.ttc == math.inf and report.critical_point is None
    assert not report.collision_predicted


def test_head_on_through_vehicle_velocity():
    # obstacle at rest, vehicle driving into it: same TTC as the mirrored case
    car = VehicleFootprint(1.0, 0.6, speed=1.0, v_max=1.0)
    report = predict_ttc(relativize(Scenario(car, (20.0, 0.0), (square(5.5, 0.0),))))
    assert report.ttc == pytest.approx(4.5)


def test_random_scenes_match_oracle():
    rng = np.random.default_rng(7)
    cfg = OracleConfig(dt=1e-3, horizon=30.0)
    finite = 0
    for _ in range(25):
        sc = ttc_scene(rng)
        rs = relativize(sc, spacing=0.15)
        got = predict_ttc(rs).ttc
        ref = oracle_ttc(rs, cfg)
        if math.isinf(ref):
            assert math.isinf(got) or got > cfg.horizon
        else:
            finite += 1
            assert got == pytest.approx(ref, abs=max(2 * cfg.dt, 1e-3 * ref))
    assert finite >= 5


def test_report_invariants():
    rng = np.random.default_rng(8)
    for _ in range(20):
        sc = ttc_scene(rng)
        # spacings dividing both edges (1.0 x 0.6) give nested samples when halved
        coarse = predict_ttc(relativize(sc, spacing=0.2), reciprocal=False)
        fine = predict_ttc(relativize(sc, spacing=0.1), reciprocal=False)
        assert fine.ttc <= coarse.ttc
        assert predict_ttc(relativize(sc, spacing=0.05)).ttc <= fine.ttc
        full = predict_ttc(relativize(sc))
        assert full.ttc == min(full.per_obstacle.values())


def test_constant_velocity_consistency():
    rng = np.random.default_rng(9)
    checked = 0
    for _ in range(30):
        sc = ttc_scene(rng)
        r0 = predict_ttc(relativize(sc))
        if not r0.collision_predicted or r0.ttc < 0.5:
            continue
        t = 0.4 * r0.ttc
        v = sc.vehicle
        moved_vehicle = VehicleFootprint(v.length, v.width, np.asarray(v.position) + t * np.asarray(v.velocity),
                                         v.heading, v.speed, v.v_max, v.a_n_max)
        obs = tuple(ob.translated(t * np.asarray(ob.velocity)) for ob in sc.obstacles)
        r1 = predict_ttc(relativize(Scenario(moved_vehicle, sc.goal, obs)))
        assert r1.ttc == pytest.approx(r0.ttc - t, abs=1e-9 * max(1.0, r0.ttc))
        checked += 1
    assert checked >= 5
