"""Time Distance motion planning: TD fields, section planner, replanning simulator."""

from .collision import RelativeScene, TTCReport, predict_ttc, relativize, sample_border
from .geometry import (
    CircleObstacle,
    ConvexPolygonObstacle,
    GeometryError,
    Point2,
    SegmentEdge,
    Velocity2,
    VehicleFootprint,
    inflate,
)
from .guidance import RouteParams, route_value, rf_feasibility, zinf_obstacle
from .planner import PathPolyline, PlannerConfig, PlanningError, plan_path, prepare_scene, section_tp
from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario, serialize_scenario
from .simulator import SimConfig, SimLog, run
from .td import section_argmax, td_circle, td_obstacle, td_polygon, td_segment, td_set
from .trajectory import desired_speed, fit_quintic, lookahead_point, rho_min

__version__ = "0.1.0"
