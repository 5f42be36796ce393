"""Scenario configuration: TOML/JSON loading, validation, and object builders.

Angles are given in degrees in files and converted to radians when the
runtime objects are built. See ``configs/full_scale.toml`` for a commented
example.
"""

from __future__ import annotations

import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .belief_map import BeliefGrid, load_prior_map, random_patches
from .global_planner import PlannerParams
from .sensor_model import SensorModel
from .simulator import SimConfig, Strategy
from .state import UavState
from .sweep_planner import SweepPlannerConfig


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""


@dataclass(frozen=True)
class MapSection:
    width: float = 5000.0
    height: float = 5000.0
    cell_size: float = 100.0
    origin: tuple = (0.0, 0.0)
    background: float = 0.001
    n_patches: int = 4
    patch_p: tuple = (0.8, 0.95)
    patch_size: tuple = (0.08, 0.2)
    patches: tuple = ()  # explicit (col0, row0, col1, row1, p) rectangles
    prior_file: str = ""


@dataclass(frozen=True)
class StartSection:
    x: float | None = None
    y: float | None = None
    psi_deg: float = 0.0
    margin: float = 0.1  # fraction of the map kept clear when randomising


@dataclass(frozen=True)
class SensorSection:
    alpha: float = 300.0
    beta: float = 800.0
    fov_h_deg: float = 40.0
    fov_v_deg: float = 30.0
    pitch_deg: float = 20.0
    altitude: float = 100.0
    psi_min_deg: float = -30.0
    psi_max_deg: float = 30.0


@dataclass(frozen=True)
class GlobalSection:
    budget: float = 5000.0
    sample_count: int = 300
    rewire_radius: float = 50.0
    min_turn_spacing: float = 200.0
    widened_fov: bool = True
    max_heading_change_deg: float = 60.0
    turn_step_deg: float = 30.0
    goal_bias: float = 0.7


@dataclass(frozen=True)
class SweepSection:
    t_future: float = 5.0
    n_layers: int = 8
    threshold_entropy: float = 0.1
    confidence_threshold: float = 0.5
    replan_period: float = 1.0
    heading_tol_deg: float = 5.0


@dataclass(frozen=True)
class SimSection:
    speed: float = 20.0
    dt: float = 0.1
    meas_period: float = 0.5
    gimbal_rate_deg: float = 30.0
    sampled: bool = False
    clamp_nonnegative: bool = True


@dataclass(frozen=True)
class RunSection:
    strategies: tuple = ("adaptive", "predefined_sweep", "no_sweep")
    runs: int = 100
    seed: int = 0
    out_dir: str = "results"
    workers: int = 1


_SECTIONS = {
    "map": MapSection,
    "start": StartSection,
    "sensor": SensorSection,
    "global_planner": GlobalSection,
    "sweep_planner": SweepSection,
    "sim": SimSection,
    "run": RunSection,
}


@dataclass(frozen=True)
class ScenarioConfig:
    map: MapSection = field(default_factory=MapSection)
    start: StartSection = field(default_factory=StartSection)
    sensor: SensorSection = field(default_factory=SensorSection)
    global_planner: GlobalSection = field(default_factory=GlobalSection)
    sweep_planner: SweepSection = field(default_factory=SweepSection)
    sim: SimSection = field(default_factory=SimSection)
    run: RunSection = field(default_factory=RunSection)

    # -- builders ---------------------------------------------------------

    def sensor_model(self) -> SensorModel:
        s = self.sensor
        return SensorModel(alpha=s.alpha, beta=s.beta, fov_h=math.radians(s.fov_h_deg),
                           fov_v=math.radians(s.fov_v_deg), pitch=math.radians(s.pitch_deg),
                           psi_min=math.radians(s.psi_min_deg), psi_max=math.radians(s.psi_max_deg))

    def sweep_config(self) -> SweepPlannerConfig:
        s = self.sweep_planner
        return SweepPlannerConfig(t_future=s.t_future, n_layers=s.n_layers,
                                  threshold_entropy=s.threshold_entropy,
                                  confidence_threshold=s.confidence_threshold,
                                  replan_period=s.replan_period,
                                  heading_tol=math.radians(s.heading_tol_deg))

    def sim_config(self) -> SimConfig:
        s = self.sim
        return SimConfig(sensor=self.sensor_model(), sweep=self.sweep_config(), speed=s.speed,
                         dt=s.dt, meas_period=s.meas_period,
                         gimbal_rate=math.radians(s.gimbal_rate_deg), sampled=s.sampled,
                         clamp_nonnegative=s.clamp_nonnegative)

    def planner_params(self) -> PlannerParams:
        g = self.global_planner
        return PlannerParams(budget=g.budget, sample_count=g.sample_count,
                             rewire_radius=g.rewire_radius, min_turn_spacing=g.min_turn_spacing,
                             widened_fov=g.widened_fov,
                             max_heading_change=math.radians(g.max_heading_change_deg),
                             turn_step=math.radians(g.turn_step_deg) if g.turn_step_deg else None,
                             goal_bias=g.goal_bias,
                             confidence_threshold=self.sweep_planner.confidence_threshold)

    def build_grid(self) -> BeliefGrid:
        """Prior grid: the prior file if given, else background plus listed patches."""
        m = self.map
        if m.prior_file:
            return load_prior_map(m.prior_file)
        grid = BeliefGrid.uniform(m.width, m.height, m.cell_size, m.background, m.origin)
        for c0, r0, c1, r1, p in m.patches:
            grid.cells[int(r0):int(r1), int(c0):int(c1)] = p
        return grid

    def start_state(self) -> UavState:
        s = self.start
        if s.x is None or s.y is None:
            raise ConfigError("start.x: start position not set (use generate_scenarios)")
        return UavState(s.x, s.y, self.sensor.altitude, math.radians(s.psi_deg))

    def to_dict(self) -> dict:
        return {name: _plain(dataclasses.asdict(getattr(self, name))) for name in _SECTIONS}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _coerce(path: str, default, value):
    """Check ``value`` against the type of the field's default."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected integer, got {value!r}")
        return value
    if isinstance(default, float) or default is None:
        if value is None and default is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected string, got {value!r}")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected list, got {value!r}")
        return tuple(tuple(v) if isinstance(v, list) else v for v in value)
    return value


def from_dict(data: dict) -> ScenarioConfig:
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown section")
    sections = {}
    for name, cls in _SECTIONS.items():
        raw = data.get(name, {})
        if not isinstance(raw, dict):
            raise ConfigError(f"{name}: expected a table")
        defaults = cls()
        kwargs = {}
        for key, value in raw.items():
            if key not in {f.name for f in dataclasses.fields(cls)}:
                raise ConfigError(f"{name}.{key}: unknown key")
            kwargs[key] = _coerce(f"{name}.{key}", getattr(defaults, key), value)
        sections[name] = cls(**kwargs)
    cfg = ScenarioConfig(**sections)
    validate(cfg)
    return cfg


def validate(cfg: ScenarioConfig) -> None:
    m = cfg.map
    if not m.prior_file:
        if m.width <= 0 or m.height <= 0 or m.cell_size <= 0:
            raise ConfigError("map.width: map dimensions and cell_size must be positive")
        if not 0 <= m.background <= 1:
            raise ConfigError("map.background: must lie in [0, 1]")
        if m.n_patches < 0:
            raise ConfigError("map.n_patches: must be non-negative")
        for i, patch in enumerate(m.patches):
            if len(patch) != 5 or not 0 <= patch[4] <= 1:
                raise ConfigError(f"map.patches[{i}]: expected [col0, row0, col1, row1, p]")
    if cfg.run.runs < 1:
        raise ConfigError("run.runs: must be at least 1")
    if cfg.run.workers < 1:
        raise ConfigError("run.workers: must be at least 1")
    for i, s in enumerate(cfg.run.strategies):
        try:
            Strategy(s)
        except ValueError:
            raise ConfigError(f"run.strategies[{i}]: unknown strategy {s!r}") from None
    if cfg.sensor.altitude <= 0:
        raise ConfigError("sensor.altitude: must be positive")
    # surface builder errors with a section path
    for section, build in (("sensor", cfg.sensor_model), ("sweep_planner", cfg.sweep_config),
                           ("sim", cfg.sim_config), ("global_planner", cfg.planner_params)):
        try:
            build()
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{section}: {exc}") from None


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    text = path.read_text()
    try:
        data = json.loads(text) if path.suffix == ".json" else tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return from_dict(data)


def generate_scenarios(base: ScenarioConfig, n: int, seed: int) -> list[ScenarioConfig]:
    """``n`` randomised copies of ``base``: own seed, start pose and patch layout.

    Explicit patches or a prior file in ``base`` are kept as they are; only
    the start and seed then vary.
    """
    if n < 1:
        raise ConfigError("runs: must be at least 1")
    validate(base)
    rng = np.random.default_rng(seed)
    grid = base.build_grid()
    x0, y0, x1, y1 = grid.bounds
    margin = base.start.margin
    out = []
    for _ in range(n):
        run_seed = int(rng.integers(0, 2**31 - 1))
        sx = float(rng.uniform(x0 + margin * (x1 - x0), x1 - margin * (x1 - x0)))
        sy = float(rng.uniform(y0 + margin * (y1 - y0), y1 - margin * (y1 - y0)))
        psi = float(rng.uniform(-180.0, 180.0))
        m = base.map
        if not m.prior_file and not m.patches:
            patches = tuple(random_patches(grid.n_cols, grid.n_rows, rng, m.n_patches,
                                           m.patch_p, m.patch_size))
            m = dataclasses.replace(m, patches=patches)
        out.append(dataclasses.replace(
            base,
            map=m,
            start=dataclasses.replace(base.start, x=sx, y=sy, psi_deg=psi),
            run=dataclasses.replace(base.run, seed=run_seed),
        ))
    return out
