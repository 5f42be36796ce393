"""Scenario builders shared by the planner and acceptance tests."""

import math

import numpy as np

from gimbalsweep.belief_map import BeliefGrid, random_patches
from gimbalsweep.geometry import build_horizon_polygon
from gimbalsweep.sensor_model import SensorModel, swept_trapezoid
from gimbalsweep.state import Trajectory, UavState
from gimbalsweep.sweep_planner import SweepPlannerConfig, future_position, max_sweep_time

import oracles

D = math.radians

# a short-range camera so the horizon polygon fits well inside a 1 km map
TEST_MODEL = SensorModel(alpha=200.0, beta=600.0, pitch=D(30), fov_h=D(20), fov_v=D(20))
TEST_CFG = SweepPlannerConfig()
RATE = D(30.0)
SPEED = 20.0


def patch_map(rng, n=50, cell=20.0, n_patches=4, background=0.001):
    g = BeliefGrid.uniform(n * cell, n * cell, cell, background)
    for c0, r0, c1, r1, p in random_patches(n, n, rng, n_patches, (0.6, 0.95), (0.05, 0.2)):
        g.cells[r0:r1, c0:c1] = p
    return g


def straight_setup(rng, grid, model=TEST_MODEL):
    """Random straight plan through the map interior and the pose at its start."""
    x0, y0, x1, y1 = grid.bounds
    psi = rng.uniform(-math.pi, math.pi)
    sx = rng.uniform(x0 + 300, x1 - 300)
    sy = rng.uniform(y0 + 300, y1 - 300)
    plan = Trajectory.from_points([(sx, sy), (sx + 2000 * math.cos(psi), sy + 2000 * math.sin(psi))],
                                  100.0, psi)
    return plan, plan[0]


def horizon(plan, uav, model=TEST_MODEL, cfg=TEST_CFG, speed=SPEED, rate=RATE):
    t_sweep = max_sweep_time(rate, model.psi_min, model.psi_max)
    fut = future_position(plan, 1, uav, speed, t_sweep, cfg.t_future)
    fc = swept_trapezoid(uav, model.psi_min, model.psi_max, model)
    ff = swept_trapezoid(fut, model.psi_min, model.psi_max, model)
    return fc, ff, build_horizon_polygon(fc, ff, uav.xy, fut.xy)


def oracle_outermost_layer(poly, grid, model, uav, cfg, is_upper, n_layers):
    """Exhaustive scan: smallest layer index holding any above-threshold cell.

    Layer lines, chord clipping, traversal and rewards are all recomputed
    here with the independent helpers in ``oracles``.
    """
    half = poly.half_upper if is_upper else poly.half_lower
    if half <= 0:
        return None
    ht = half / n_layers
    n = np.array([-poly.axis[1], poly.axis[0]])
    best = None
    for k in range(n_layers):
        y = max(half - k * ht, 0.0) * (1 if is_upper else -1)
        base = np.asarray(poly.origin) + y * n
        ch = oracles.convex_chord(poly.vertices, base, poly.axis)
        if ch is None:
            continue
        a, b = base + ch[0] * poly.axis, base + ch[1] * poly.axis
        if np.hypot(*(b - a)) < 1e-9:
            c, r = math.floor((a[0] - grid.origin_x) / grid.cell_size), \
                math.floor((a[1] - grid.origin_y) / grid.cell_size)
            cells = {(c, r)} if grid.in_bounds(c, r) else set()
        else:
            cells = oracles.rect_oracle_cells_np(a, b, grid.n_cols, grid.n_rows, grid.cell_size,
                                                 grid.origin_x, grid.origin_y)
        for c, r in cells:
            cx = grid.origin_x + (c + 0.5) * grid.cell_size
            cy = grid.origin_y + (r + 0.5) * grid.cell_size
            rng_ = math.sqrt((cx - uav.x) ** 2 + (cy - uav.y) ** 2 + uav.z ** 2)
            t = oracles.tpr(rng_, model.alpha, model.beta)
            dh = oracles.assumed_delta_h(float(grid.cells[r, c]), t, 1 - t, t, 1 - t,
                                         cfg.confidence_threshold)
            if dh >= cfg.threshold_entropy:
                best = k
                break
        if best is not None:
            return best
    return None
