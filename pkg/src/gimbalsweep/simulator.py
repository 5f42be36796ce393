"""Closed-loop kinematic simulation: path following, gimbal sweep, belief updates."""

from __future__ import annotations

import csv
import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .belief_map import BeliefGrid, cell_entropy, expected_update, sampled_update
from .sensor_model import SensorModel, instantaneous_footprint
from .state import Trajectory, UavState, cumulative_lengths, pose_at
from .sweep_planner import SweepBounds, SweepPlannerConfig, plan_sweep

log = logging.getLogger(__name__)

SERIES_COLUMNS = ("t", "entropy_bits", "pct_reduction", "psi_c_deg", "psi1_deg", "psi2_deg", "x", "y")


class Strategy(str, enum.Enum):
    ADAPTIVE = "adaptive"
    PREDEFINED_SWEEP = "predefined_sweep"
    NO_SWEEP = "no_sweep"


@dataclass(frozen=True)
class SimConfig:
    sensor: SensorModel = field(default_factory=SensorModel)
    sweep: SweepPlannerConfig = field(default_factory=SweepPlannerConfig)
    speed: float = 20.0
    dt: float = 0.1
    meas_period: float = 0.5
    gimbal_rate: float = math.radians(30.0)
    sampled: bool = False
    clamp_nonnegative: bool = True
    capture_radius: float | None = None  # default: half a cell

    def __post_init__(self):
        if not (self.speed > 0 and self.dt > 0 and self.gimbal_rate > 0):
            raise ValueError("speed, dt and gimbal_rate must be positive")
        for name in ("meas_period",):
            self._ticks(getattr(self, name))
        self._ticks(self.sweep.replan_period)

    def _ticks(self, period: float) -> int:
        n = round(period / self.dt)
        if n < 1 or abs(n * self.dt - period) > 1e-9 * max(1.0, period):
            raise ValueError(f"period {period} must be a positive multiple of dt={self.dt}")
        return n

    @property
    def meas_ticks(self) -> int:
        return self._ticks(self.meas_period)

    @property
    def replan_ticks(self) -> int:
        return self._ticks(self.sweep.replan_period)


@dataclass
class GimbalState:
    yaw: float = 0.0
    rate: float = math.radians(30.0)
    direction: int = 1
    bounds: SweepBounds = field(default_factory=lambda: SweepBounds(0.0, 0.0))


def advance_gimbal(g: GimbalState, dt: float) -> None:
    """Sweep back and forth inside the bounds, reflecting at each end.

    If the yaw sits outside the bounds (they just shrank) it slews toward the
    nearer bound at the gimbal rate and resumes sweeping from there.
    """
    lo, hi = g.bounds.psi1, g.bounds.psi2
    travel = g.rate * dt
    if g.yaw < lo:
        step = min(travel, lo - g.yaw)
        g.yaw += step
        travel -= step
        g.direction = 1
    elif g.yaw > hi:
        step = min(travel, g.yaw - hi)
        g.yaw -= step
        travel -= step
        g.direction = -1
    if travel <= 0.0 or not (lo <= g.yaw <= hi):
        return
    if hi == lo:
        g.yaw = lo
        return
    while travel > 0.0:
        target = hi if g.direction > 0 else lo
        room = abs(target - g.yaw)
        if travel < room:
            g.yaw += g.direction * travel
            break
        g.yaw = target
        travel -= room
        g.direction = -g.direction


@dataclass
class SimState:
    time: float
    uav: UavState
    gimbal: GimbalState
    wp: int
    grid: BeliefGrid
    plan: Trajectory
    arc: float = 0.0
    tick: int = 0
    ground_truth: np.ndarray | None = None
    rng: np.random.Generator | None = None
    seed: int = 0
    h0: float = 0.0
    replans: list = field(default_factory=list)
    _cum: np.ndarray | None = None

    @property
    def plan_length(self) -> float:
        return float(self._cum[-1])

    @property
    def done(self) -> bool:
        return self.arc >= self.plan_length


def initial_state(grid: BeliefGrid, plan: Trajectory, cfg: SimConfig, seed: int = 0,
                  strategy=Strategy.ADAPTIVE) -> SimState:
    grid = grid.copy()
    rng = np.random.default_rng(seed)
    truth = rng.random(grid.cells.shape) < grid.cells if cfg.sampled else None
    cum = cumulative_lengths(plan)
    uav, wp = pose_at(plan, 0.0, cum)
    gimbal = GimbalState(0.0, cfg.gimbal_rate, 1, _fixed_bounds(Strategy(strategy), cfg.sensor))
    st = SimState(0.0, uav, gimbal, wp, grid, plan, ground_truth=truth, rng=rng, seed=seed,
                  h0=float(np.sum(cell_entropy(grid.cells))), _cum=cum)
    return st


def _fixed_bounds(strategy: Strategy, model: SensorModel) -> SweepBounds:
    if strategy is Strategy.NO_SWEEP:
        return SweepBounds(0.0, 0.0)
    return SweepBounds.full(model)


def measure(state: SimState, cfg: SimConfig) -> None:
    """Update every cell whose centre lies in the current camera footprint."""
    model = cfg.sensor
    fp = instantaneous_footprint(state.uav, state.gimbal.yaw, model)
    grid = state.grid
    rows, cols = fp.cells_inside(grid)
    if rows.size == 0:
        return
    cs = grid.cell_size
    ranges = model.slant_range(state.uav, grid.origin_x + (cols + 0.5) * cs,
                               grid.origin_y + (rows + 0.5) * cs)
    if cfg.sampled:
        tpr, fpr, _, _ = model.rates_at_range(ranges)
        u = state.rng.random(rows.size)
        present = state.ground_truth[rows, cols]
        detections = np.where(present, u < tpr, u < fpr)
        sampled_update(grid.cells, rows, cols, ranges, model, detections)
    else:
        expected_update(grid.cells, rows, cols, ranges, model,
                        cfg.sweep.confidence_threshold, cfg.clamp_nonnegative)


def step(state: SimState, dt: float, strategy, cfg: SimConfig) -> SimState:
    """Advance one tick: replan (adaptive), move gimbal and vehicle, maybe measure.

    ``dt`` must equal ``cfg.dt``; tick counting keeps replan and measurement
    instants exact.
    """
    if abs(dt - cfg.dt) > 1e-12:
        raise ValueError("dt must match cfg.dt")
    strategy = Strategy(strategy)
    model = cfg.sensor
    if strategy is Strategy.ADAPTIVE and state.tick % cfg.replan_ticks == 0:
        bounds = plan_sweep(state.plan, state.wp, state.uav, state.grid, model, cfg.sweep,
                            cfg.gimbal_rate, cfg.speed)
        state.gimbal.bounds = bounds
        state.replans.append(_replan_record(state.time, bounds))
    elif strategy is not Strategy.ADAPTIVE:
        state.gimbal.bounds = _fixed_bounds(strategy, model)

    advance_gimbal(state.gimbal, dt)

    state.tick += 1
    state.time = state.tick * dt
    state.arc = min(state.arc + cfg.speed * dt, state.plan_length)
    state.uav, idx = pose_at(state.plan, state.arc, state._cum)
    capture = cfg.capture_radius if cfg.capture_radius is not None else 0.5 * state.grid.cell_size
    wp = max(state.wp, idx)
    if wp < len(state.plan) - 1 and state._cum[wp] - state.arc <= capture:
        wp += 1
    state.wp = wp

    if state.tick % cfg.meas_ticks == 0:
        measure(state, cfg)
    return state


def _replan_record(t, b: SweepBounds) -> dict:
    rec = {"t": t, "psi1_deg": math.degrees(b.psi1), "psi2_deg": math.degrees(b.psi2),
           "turning": b.turning}
    for side, hit in (("upper", b.upper), ("lower", b.lower)):
        rec[f"{side}_cell"] = None if hit is None else [int(hit.cell[0]), int(hit.cell[1])]
        rec[f"{side}_layer"] = None if hit is None else int(hit.layer)
    return rec


@dataclass
class RunResult:
    strategy: str
    seed: int
    series: dict
    final_pct: float
    duration: float
    replans: list

    @property
    def rate_per_s(self) -> float:
        return self.final_pct / self.duration if self.duration > 0 else 0.0


def _record(series: dict, state: SimState) -> None:
    h = float(np.sum(cell_entropy(state.grid.cells)))
    pct = 100.0 * (state.h0 - h) / state.h0 if state.h0 > 0 else 0.0
    g = state.gimbal
    for key, val in zip(SERIES_COLUMNS, (state.time, h, pct, math.degrees(g.yaw),
                                         math.degrees(g.bounds.psi1), math.degrees(g.bounds.psi2),
                                         state.uav.x, state.uav.y)):
        series[key].append(val)


def run_scenario(grid: BeliefGrid, plan: Trajectory, strategy, cfg: SimConfig,
                 seed: int = 0, check=None) -> RunResult:
    """Fly the whole plan once and return the sampled time series.

    ``check`` (optional) is called with the state after every step; tests use
    it to assert per-step invariants.
    """
    strategy = Strategy(strategy)
    state = initial_state(grid, plan, cfg, seed, strategy)
    series = {k: [] for k in SERIES_COLUMNS}
    _record(series, state)
    while not state.done:
        step(state, cfg.dt, strategy, cfg)
        if check is not None:
            check(state)
        _record(series, state)
    return RunResult(strategy.value, seed, series, series["pct_reduction"][-1],
                     state.time, state.replans)


def write_series(result: RunResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SERIES_COLUMNS)
        cols = [result.series[k] for k in SERIES_COLUMNS]
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])
