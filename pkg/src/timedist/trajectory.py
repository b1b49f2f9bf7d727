"""Look-ahead selection, quintic smoothing and the curvature speed law."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Point2


def _polyline(path) -> np.ndarray:
    if hasattr(path, "xy"):
        return path.xy()
    return np.asarray(path, dtype=float).reshape(-1, 2)


def _arc(pts: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])


def lookahead_point(path, distance: float) -> Point2:
    """Point at arc length ``distance`` along the polyline (its end if shorter).

    ``path`` is a :class:`~timedist.planner.PathPolyline` (measured from the
    vehicle at the origin) or an ``(N, 2)`` array.
    """
    pts = _polyline(path)
    if len(pts) == 0:
        raise ValueError("empty path")
    s = _arc(pts)
    if distance >= s[-1]:
        return Point2(*pts[-1])
    k = int(np.searchsorted(s, distance, side="right")) - 1
    k = max(k, 0)
    frac = (distance - s[k]) / (s[k + 1] - s[k])
    return Point2(*(pts[k] + frac * (pts[k + 1] - pts[k])))


def path_slope(path, distance: float) -> float:
    """dy/dx of the path around arc length ``distance``.

    Taken over the neighbouring vertices so single-section jumps are softened.
    """
    pts = _polyline(path)
    if len(pts) < 2:
        return 0.0
    s = _arc(pts)
    k = int(np.clip(np.searchsorted(s, min(distance, s[-1]), side="right") - 1, 0, len(pts) - 2))
    lo, hi = max(k - 1, 0), min(k + 2, len(pts) - 1)
    run = pts[hi, 0] - pts[lo, 0]
    if run <= 0.0:
        return 0.0
    return float((pts[hi, 1] - pts[lo, 1]) / run)


def limited_end_slope(slope: float, x_end: float, y_end: float) -> float:
    """Clamp an end slope to ``[0, 2.5 * y_end / x_end]`` (interval oriented by sign).

    Within that range a quintic that starts flat keeps y' of one sign on
    ``(0, x_end)``: it never swings away from the target before reaching it.
    A steep path step just past the look-ahead point otherwise forces such a
    swing.
    """
    cap = 2.5 * y_end / x_end
    lo, hi = min(0.0, cap), max(0.0, cap)
    return float(min(max(slope, lo), hi))


@dataclass(frozen=True)
class QuinticSegment:
    """``y(x) = sum c_k x^k`` on ``[0, x_end]`` in the vehicle frame."""

    coeffs: tuple
    x_end: float

    def y(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs)

    def dy(self, x):
        return np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(self.coeffs))

    def d2y(self, x):
        return np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(self.coeffs, 2))

    def curvature(self, x):
        d1 = self.dy(x)
        return self.d2y(x) / (1.0 + d1 * d1) ** 1.5

    def heading(self, x):
        return np.arctan(self.dy(x))

    def arc_table(self, n: int = 2001) -> tuple[np.ndarray, np.ndarray]:
        """``(x, s)`` samples of cumulative arc length (trapezoidal rule)."""
        xs = np.linspace(0.0, self.x_end, n)
        speed = np.sqrt(1.0 + self.dy(xs) ** 2)
        s = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(xs))])
        return xs, s

    def length(self) -> float:
        return float(self.arc_table()[1][-1])


def fit_quintic(x_end: float, y_end: float, slope_end: float = 0.0, curvature0: float = 0.0,
                end_curvature: float = 0.0) -> QuinticSegment:
    """Quintic from the vehicle (origin, heading along +x) to a target point.

    Boundary conditions: y(0) = 0, y'(0) = 0, y''(0) = ``curvature0`` (the
    tangent is horizontal there, so y'' equals the curvature), y(x_end) =
    ``y_end``, y'(x_end) = ``slope_end``, y''(x_end) = ``end_curvature``.
    """
    if not x_end > 0.0:
        raise ValueError("quintic needs a positive end abscissa")
    X = x_end
    A = np.array([
        [1, 0, 0, 0, 0, 0],
        [0, 1, 0, 0, 0, 0],
        [0, 0, 2, 0, 0, 0],
        [1, X, X**2, X**3, X**4, X**5],
        [0, 1, 2 * X, 3 * X**2, 4 * X**3, 5 * X**4],
        [0, 0, 2, 6 * X, 12 * X**2, 20 * X**3],
    ], dtype=float)
    b = np.array([0.0, 0.0, curvature0, y_end, slope_end, end_curvature])
    return QuinticSegment(tuple(np.linalg.solve(A, b)), X)


def rho_min(v_max: float, a_n_max: float) -> float:
    """Tightest radius of curvature that can be taken at full speed."""
    return v_max * v_max / a_n_max


def desired_speed(curvature, v_max: float, a_n_max: float):
    """``min(v_max, sqrt(a_n_max * rho))`` with ``rho = 1/|curvature|``."""
    k = np.abs(np.asarray(curvature, dtype=float))
    with np.errstate(divide="ignore"):
        cap = np.sqrt(a_n_max / k)
    v = np.minimum(v_max, cap)
    return float(v) if v.ndim == 0 else v


@dataclass(frozen=True)
class TrajectorySample:
    position: Point2
    heading: float
    curvature: float
    rho: float
    v_d: float
    s: float = 0.0


def speed_profile(seg: QuinticSegment, v_max: float, a_n_max: float, step: float | None = None) -> list[TrajectorySample]:
    """Samples at fixed arc-length steps with the lateral-acceleration speed cap."""
    xs_tab, s_tab = seg.arc_table()
    total = s_tab[-1]
    if step is None:
        step = total / 50.0
    n = max(1, int(math.ceil(total / step - 1e-9)))
    s = np.minimum(np.arange(n + 1) * step, total)
    x = np.interp(s, s_tab, xs_tab)
    kappa = seg.curvature(x)
    v = desired_speed(kappa, v_max, a_n_max)
    out = []
    for xi, yi, hi, ki, vi, si in zip(x, seg.y(x), seg.heading(x), kappa, np.atleast_1d(v), s):
        rho = math.inf if ki == 0.0 else 1.0 / abs(ki)
        out.append(TrajectorySample(Point2(float(xi), float(yi)), float(hi), float(ki), rho, float(vi), float(si)))
    return out
