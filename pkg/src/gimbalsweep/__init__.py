"""Adaptive gimbal sweep planning for UAV target search on a belief grid."""

from .belief_map import (
    BeliefGrid,
    CellIndex,
    bayes_update,
    cell_entropy,
    expected_entropy_reduction,
    percent_entropy_reduction,
)
from .geometry import HorizonPolygon, bresenham_cells, build_horizon_polygon
from .global_planner import PlannerParams, plan_global, trajectory_information
from .sensor_model import FootprintTrapezoid, SensorModel, instantaneous_footprint, swept_trapezoid
from .simulator import SimConfig, Strategy, run_scenario
from .state import Trajectory, UavState
from .sweep_planner import SweepBounds, SweepPlannerConfig, future_position, plan_sweep

__version__ = "0.1.0"
