"""Budgeted information-gathering path planner.

A small sampling-based tree planner: branches are straight legs with a
minimum length and a capped heading change at each vertex, grown toward
samples drawn mostly from high-reward cells. Every node keeps the belief it
would leave behind, so a branch's value is the entropy it removes along the
whole path. The best branch within budget is returned.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .belief_map import BeliefGrid, cell_entropy, expected_entropy_reduction, expected_update
from .sensor_model import FootprintTrapezoid, SensorModel, instantaneous_footprint, swept_trapezoid
from .state import Trajectory, UavState, bearing, sample_poses, wrap_angle

__all__ = [
    "Trajectory",
    "PlannerParams",
    "coverage_region",
    "trajectory_information",
    "plan_global",
    "save_trajectory",
    "load_trajectory",
]


@dataclass(frozen=True)
class PlannerParams:
    budget: float = 5000.0
    sample_count: int = 300
    rewire_radius: float = 50.0
    min_turn_spacing: float = 200.0
    widened_fov: bool = True
    max_heading_change: float = math.radians(60.0)
    turn_step: float | None = math.radians(30.0)  # heading changes snap to multiples
    max_segment: float | None = None  # default: 2 * min_turn_spacing
    goal_bias: float = 0.7
    info_spacing: float | None = None  # default: grid cell size
    confidence_threshold: float = 0.5
    free_initial_heading: bool = True  # first leg may leave in any direction

    def __post_init__(self):
        if not self.budget > 0:
            raise ValueError("budget must be positive")
        if self.sample_count < 0 or self.min_turn_spacing <= 0 or self.rewire_radius < 0:
            raise ValueError("invalid planner parameters")

    @property
    def segment_max(self) -> float:
        return self.max_segment if self.max_segment is not None else 2.0 * self.min_turn_spacing


@functools.lru_cache(maxsize=64)
def _local_region(model: SensorModel, z: float, widened: bool) -> np.ndarray:
    """Coverage vertices for a pose at the origin heading along +x."""
    pose = UavState(0.0, 0.0, z, 0.0)
    if widened:
        return swept_trapezoid(pose, model.psi_min, model.psi_max, model).vertices
    return instantaneous_footprint(pose, 0.0, model).vertices


def coverage_region(pose: UavState, model: SensorModel, widened: bool):
    """Ground area credited to one pose: the whole pan when widened, else straight ahead.

    The shape depends only on altitude, so it is built once and moved rigidly.
    """
    c, s = math.cos(pose.psi), math.sin(pose.psi)
    local = _local_region(model, pose.z, widened)
    return FootprintTrapezoid(local @ np.array([[c, s], [-s, c]]) + np.array([pose.x, pose.y]))


def _observe(cells: np.ndarray, grid: BeliefGrid, pose: UavState, model: SensorModel,
             widened: bool, confidence_threshold: float) -> None:
    region = coverage_region(pose, model, widened)
    rows, cols = region.cells_inside(grid)
    if rows.size == 0:
        return
    cs = grid.cell_size
    ranges = model.slant_range(pose, grid.origin_x + (cols + 0.5) * cs,
                               grid.origin_y + (rows + 0.5) * cs)
    expected_update(cells, rows, cols, ranges, model, confidence_threshold, clamp_nonnegative=True)


def trajectory_information(T: Trajectory, grid: BeliefGrid, model: SensorModel, widened: bool,
                           spacing: float | None = None, confidence_threshold: float = 0.5) -> float:
    """Entropy (bits) removed by flying T, using assumed measurements on a scratch grid.

    Poses are the first waypoint, then every ``spacing`` meters (default one
    cell) along each leg, restarting at each vertex with the leg's heading,
    the same sampling the planner uses. Extending T therefore only appends
    poses, and since per-cell updates that would raise entropy are skipped the
    result is never negative and never shrinks when T is extended.
    """
    if T.cost <= 0.0:
        return 0.0
    spacing = grid.cell_size if spacing is None else spacing
    cells = grid.cells.copy()
    h0 = float(np.sum(cell_entropy(cells)))
    _observe(cells, grid, T[0], model, widened, confidence_threshold)
    for a, b in zip(T.waypoints[:-1], T.waypoints[1:]):
        if a.x == b.x and a.y == b.y:
            continue
        for pose in sample_poses(_leg(a.x, a.y, b.x, b.y, a.z), spacing)[1:]:
            _observe(cells, grid, pose, model, widened, confidence_threshold)
    return h0 - float(np.sum(cell_entropy(cells)))


def _leg(x0, y0, x1, y1, z) -> Trajectory:
    heading = bearing(x0, y0, x1, y1)
    return Trajectory((UavState(x0, y0, z, heading), UavState(x1, y1, z, heading)))


@dataclass
class _Node:
    x: float
    y: float
    heading: float
    cost: float
    info: float
    parent: int
    cells: np.ndarray


def _reward_weights(grid: BeliefGrid, model: SensorModel, threshold: float) -> np.ndarray:
    tpr, fpr, tnr, fnr = model.rates_at_range(0.0)
    r = expected_entropy_reduction(grid.cells, tpr, fpr, tnr, fnr, threshold)
    w = np.clip(np.asarray(r, dtype=float), 0.0, None).ravel()
    total = w.sum()
    return w / total if total > 0 else None


def _room(x, y, heading, bounds) -> float:
    """Distance from (x, y) along ``heading`` to the map edge."""
    x0, y0, x1, y1 = bounds
    c, s = math.cos(heading), math.sin(heading)
    room = math.inf
    if c > 0:
        room = min(room, (x1 - x) / c)
    elif c < 0:
        room = min(room, (x0 - x) / c)
    if s > 0:
        room = min(room, (y1 - y) / s)
    elif s < 0:
        room = min(room, (y0 - y) / s)
    return max(room * (1.0 - 1e-12), 0.0)


def plan_global(start: UavState, grid: BeliefGrid, model: SensorModel, params: PlannerParams,
                seed: int) -> Trajectory:
    """Best-information trajectory from ``start`` with length at most the budget."""
    x0, y0, x1, y1 = grid.bounds
    if not (x0 <= start.x <= x1 and y0 <= start.y <= y1):
        raise ValueError("start position outside the map")
    rng = np.random.default_rng(seed)
    spacing = params.info_spacing or grid.cell_size
    thr = params.confidence_threshold
    weights = _reward_weights(grid, model, thr)
    xs, ys = grid.centers()
    xs, ys = xs.ravel(), ys.ravel()

    h_start = float(np.sum(cell_entropy(grid.cells)))
    root_cells = grid.cells.copy()
    _observe(root_cells, grid, start, model, params.widened_fov, thr)
    root_info = h_start - float(np.sum(cell_entropy(root_cells)))
    nodes = [_Node(start.x, start.y, start.psi, 0.0, root_info, -1, root_cells)]
    seg_max = params.segment_max

    for _ in range(params.sample_count):
        if weights is not None and rng.random() < params.goal_bias:
            k = int(rng.choice(len(weights), p=weights))
            tx = xs[k] + rng.uniform(-0.5, 0.5) * grid.cell_size
            ty = ys[k] + rng.uniform(-0.5, 0.5) * grid.cell_size
        else:
            tx, ty = rng.uniform(x0, x1), rng.uniform(y0, y1)

        best_i, best_d = -1, math.inf
        for i, nd in enumerate(nodes):
            if params.budget - nd.cost < params.min_turn_spacing:
                continue
            d = math.hypot(tx - nd.x, ty - nd.y)
            if d < best_d:
                best_i, best_d = i, d
        if best_i < 0:
            break
        nd = nodes[best_i]

        turn = wrap_angle(bearing(nd.x, nd.y, tx, ty) - nd.heading)
        if not (best_i == 0 and params.free_initial_heading):
            turn = max(-params.max_heading_change, min(params.max_heading_change, turn))
        if params.turn_step:
            turn = params.turn_step * round(turn / params.turn_step)
        heading = wrap_angle(nd.heading + turn)
        # small margin keeps the recomputed polyline length within budget
        length = min(max(best_d, params.min_turn_spacing), seg_max, params.budget - nd.cost - 1e-7)
        length = min(length, _room(nd.x, nd.y, heading, grid.bounds))
        if length < params.min_turn_spacing:
            continue
        nx, ny = nd.x + length * math.cos(heading), nd.y + length * math.sin(heading)

        cells = nd.cells.copy()
        for pose in sample_poses(_leg(nd.x, nd.y, nx, ny, start.z), spacing)[1:]:
            _observe(cells, grid, pose, model, params.widened_fov, thr)
        info = h_start - float(np.sum(cell_entropy(cells)))
        cost = nd.cost + length

        dominated = any(
            o.info >= info and o.cost <= cost and math.hypot(o.x - nx, o.y - ny) <= params.rewire_radius
            for o in nodes
        )
        if dominated:
            continue
        nodes.append(_Node(nx, ny, heading, cost, info, best_i, cells))

    best = max(range(len(nodes)), key=lambda i: (nodes[i].info, -nodes[i].cost, -i))
    chain = []
    i = best
    while i >= 0:
        chain.append(nodes[i])
        i = nodes[i].parent
    chain.reverse()
    if len(chain) == 1:
        return Trajectory((start,))
    pts = [(n.x, n.y) for n in chain]
    return Trajectory.from_points(pts, start.z, start.psi)


def save_trajectory(T: Trajectory, path) -> None:
    lines = [f"cost={T.cost!r}", "# x y z psi"]
    for w in T.waypoints:
        lines.append(f"{w.x!r} {w.y!r} {w.z!r} {w.psi!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_trajectory(path) -> Trajectory:
    lines = Path(path).read_text().splitlines()
    rows = [ln.split() for ln in lines if ln.strip() and not ln.startswith(("#", "cost="))]
    wps = tuple(UavState(*(float(v) for v in r)) for r in rows)
    T = Trajectory(wps)
    header = [ln for ln in lines if ln.startswith("cost=")]
    if header and abs(float(header[0].split("=", 1)[1]) - T.cost) > 1e-6:
        raise ValueError(f"{path}: stored cost does not match waypoint path length")
    return T
