"""Gimbal sweep-bound planning over a look-ahead horizon.

Each replan looks at the region the camera could cover between the current
pose and a predicted future pose, scans it in lines parallel to the path from
the outside in, and narrows the yaw sweep to the outermost cells whose
expected entropy reduction clears a threshold.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .belief_map import BeliefGrid, CellIndex, cell_entropy, assumed_posterior
from .geometry import (
    HorizonPolygon,
    bresenham_cells,
    build_horizon_polygon,
    layer_endpoints,
    layer_y,
)
from .sensor_model import FootprintTrapezoid, SensorModel, swept_trapezoid
from .state import Trajectory, UavState, bearing, wrap_angle

log = logging.getLogger(__name__)

__all__ = [
    "UavState",
    "SweepBounds",
    "SweepPlannerConfig",
    "BoundaryHit",
    "max_sweep_time",
    "future_position",
    "find_high_info_cell",
    "find_boundary_high_info_cell",
    "bounds_from_cell",
    "is_turning",
    "plan_sweep",
]


@dataclass(frozen=True)
class SweepPlannerConfig:
    t_future: float = 5.0
    n_layers: int = 8
    threshold_entropy: float = 0.1
    confidence_threshold: float = 0.5
    replan_period: float = 1.0
    heading_tol: float = math.radians(5.0)

    def __post_init__(self):
        if self.t_future < 0 or self.replan_period <= 0 or self.heading_tol <= 0:
            raise ValueError("t_future, replan_period and heading_tol must be positive")
        if int(self.n_layers) < 1:
            raise ValueError("n_layers must be at least 1")
        if not self.threshold_entropy > 0:
            raise ValueError("threshold_entropy must be positive")
        if not 0 < self.confidence_threshold <= 1:
            raise ValueError("confidence_threshold must lie in (0, 1]")


class BoundaryHit(NamedTuple):
    cell: CellIndex
    layer: int
    offset: float


@dataclass(frozen=True)
class SweepBounds:
    """Yaw interval [psi1, psi2] the gimbal oscillates in (rad, vehicle frame).

    ``upper``/``lower`` record which boundary cells pinned each bound; they
    are diagnostics and do not take part in equality.
    """

    psi1: float
    psi2: float
    upper: BoundaryHit | None = field(default=None, compare=False)
    lower: BoundaryHit | None = field(default=None, compare=False)
    turning: bool = field(default=False, compare=False)

    @classmethod
    def full(cls, model: SensorModel, turning=False) -> SweepBounds:
        return cls(model.psi_min, model.psi_max, turning=turning)

    def is_full(self, model: SensorModel) -> bool:
        return self.psi1 == model.psi_min and self.psi2 == model.psi_max


def max_sweep_time(gimbal_rate: float, psi_min: float = math.radians(-30.0),
                   psi_max: float = math.radians(30.0)) -> float:
    if not gimbal_rate > 0:
        raise ValueError("gimbal_rate must be positive")
    return (psi_max - psi_min) / gimbal_rate


def future_position(plan: Trajectory, wp: int, current_pos: UavState, speed: float,
                    t_max_sweep: float, t_future: float) -> UavState:
    """Pose reached after flying ``speed * (t_max_sweep + t_future)`` along the plan.

    ``wp`` is the index of the next waypoint ahead of ``current_pos``. Segment
    lengths are accumulated from the current position onward and the final
    partial segment is interpolated; heading is that segment's bearing. If the
    plan runs out first, its last waypoint is returned.
    """
    if len(plan) == 0:
        raise ValueError("empty plan")
    if not 0 <= wp < len(plan):
        raise IndexError(f"waypoint index {wp} outside plan of {len(plan)}")
    if not speed > 0:
        raise ValueError("speed must be positive")
    d_future = speed * (t_max_sweep + t_future)
    prev = current_pos
    covered = 0.0
    for i in range(wp, len(plan)):
        nxt = plan[i]
        seg = math.hypot(nxt.x - prev.x, nxt.y - prev.y)
        if seg > 0 and covered + seg >= d_future:
            ratio = (d_future - covered) / seg
            return UavState(prev.x + ratio * (nxt.x - prev.x),
                            prev.y + ratio * (nxt.y - prev.y),
                            prev.z + ratio * (nxt.z - prev.z),
                            bearing(prev.x, prev.y, nxt.x, nxt.y))
        covered += seg
        prev = nxt
    return plan[len(plan) - 1]


def is_turning(plan: Trajectory, wp: int, horizon_dist: float, heading_tol: float,
               current: UavState | None = None) -> bool:
    """True if the path bends by more than ``heading_tol`` within ``horizon_dist``.

    Distance is arc length from ``current`` (default: waypoint ``wp``).
    """
    pts = [(w.x, w.y) for w in plan.waypoints[wp:]]
    if current is not None:
        pts.insert(0, (current.x, current.y))
    dist = 0.0
    prev_heading = None
    for (x0, y0), (x1, y1) in zip(pts[:-1], pts[1:]):
        seg = math.hypot(x1 - x0, y1 - y0)
        if seg == 0.0:
            continue
        h = bearing(x0, y0, x1, y1)
        # dist is the arc length to this segment's start vertex
        if prev_heading is not None and abs(wrap_angle(h - prev_heading)) > heading_tol:
            return True
        dist += seg
        if dist > horizon_dist:
            return False
        prev_heading = h
    return False


def _cell_rewards(cols, rows, grid: BeliefGrid, model: SensorModel, uav: UavState,
                  confidence_threshold: float):
    cs = grid.cell_size
    cx = grid.origin_x + (cols + 0.5) * cs
    cy = grid.origin_y + (rows + 0.5) * cs
    tpr, fpr, tnr, fnr = model.rates_at_range(model.slant_range(uav, cx, cy))
    p_old = grid.cells[rows, cols]
    p_new = assumed_posterior(p_old, tpr, fpr, tnr, fnr, confidence_threshold)
    return cell_entropy(p_old) - cell_entropy(p_new)


def find_high_info_cell(cells, grid: BeliefGrid, model: SensorModel, uav: UavState,
                        cfg: SweepPlannerConfig) -> CellIndex | None:
    """First cell in ``cells`` whose expected entropy drop reaches the threshold."""
    inside = [c for c in cells if grid.in_bounds(c[0], c[1])]
    if not inside:
        return None
    idx = np.array(inside, dtype=int).reshape(-1, 2)
    reward = np.atleast_1d(_cell_rewards(idx[:, 0], idx[:, 1], grid, model, uav,
                                         cfg.confidence_threshold))
    hits = np.flatnonzero(reward >= cfg.threshold_entropy)
    if hits.size == 0:
        return None
    c = inside[int(hits[0])]
    return CellIndex(int(c[0]), int(c[1]))


def find_boundary_high_info_cell(f_current: FootprintTrapezoid, f_future: FootprintTrapezoid,
                                 grid: BeliefGrid, model: SensorModel, uav: UavState,
                                 n_layers: int, is_upper: bool, cfg: SweepPlannerConfig,
                                 poly: HorizonPolygon | None = None) -> BoundaryHit | None:
    """Outermost above-threshold cell on one side of the horizon polygon.

    Layers run from the polygon edge (layer 0) toward the path, spaced by the
    side's half-height over ``n_layers``. The first layer that yields a hit
    wins.
    """
    if poly is None:
        try:
            poly = build_horizon_polygon(f_current, f_future, current_xy=uav.xy)
        except ValueError:
            return None
    half = poly.half_height(is_upper)
    if half <= 0.0:
        return None
    layer_ht = half / n_layers
    for layer in range(n_layers):
        cur_y = layer_y(layer, layer_ht, is_upper, half)
        ends = layer_endpoints(poly, cur_y)
        if ends is None:
            continue
        cells = bresenham_cells(ends[0], ends[1], grid)
        cell = find_high_info_cell(cells, grid, model, uav, cfg)
        if cell is not None:
            return BoundaryHit(cell, layer, cur_y)
    return None


def bounds_from_cell(uav: UavState, cell, grid: BeliefGrid, model: SensorModel) -> float:
    """Gimbal yaw that points the camera at the cell centre, clamped to the limits."""
    cx, cy = grid.cell_center(cell)
    yaw = wrap_angle(bearing(uav.x, uav.y, cx, cy) - uav.psi)
    return min(max(yaw, model.psi_min), model.psi_max)


def plan_sweep(plan: Trajectory, wp: int, uav: UavState, grid: BeliefGrid, model: SensorModel,
               cfg: SweepPlannerConfig, gimbal_rate: float, speed: float) -> SweepBounds:
    """Sweep bounds for the next replan period.

    Turns ahead, an empty horizon, or any geometric failure all give the
    full gimbal range.
    """
    try:
        t_sweep = max_sweep_time(gimbal_rate, model.psi_min, model.psi_max)
        horizon = speed * (t_sweep + cfg.t_future)
        if is_turning(plan, wp, horizon, cfg.heading_tol, current=uav):
            return SweepBounds.full(model, turning=True)
        f_current = swept_trapezoid(uav, model.psi_min, model.psi_max, model)
        x_future = future_position(plan, wp, uav, speed, t_sweep, cfg.t_future)
        f_future = swept_trapezoid(x_future, model.psi_min, model.psi_max, model)
        poly = build_horizon_polygon(f_current, f_future, uav.xy, x_future.xy)
        upper = find_boundary_high_info_cell(f_current, f_future, grid, model, uav,
                                             cfg.n_layers, True, cfg, poly)
        lower = find_boundary_high_info_cell(f_current, f_future, grid, model, uav,
                                             cfg.n_layers, False, cfg, poly)
    except (ValueError, IndexError) as exc:
        log.debug("sweep planning fell back to full bounds: %s", exc)
        return SweepBounds.full(model)

    psi1, psi2 = model.psi_min, model.psi_max
    if upper is not None:
        psi2 = bounds_from_cell(uav, upper.cell, grid, model)
    if lower is not None:
        psi1 = bounds_from_cell(uav, lower.cell, grid, model)
    if psi1 > psi2:
        psi1, psi2 = psi2, psi1
    log.debug("bounds %.1f..%.1f deg upper=%s lower=%s",
              math.degrees(psi1), math.degrees(psi2), upper, lower)
    return SweepBounds(psi1, psi2, upper, lower)
