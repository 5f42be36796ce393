"""Command-line entry point.

    gimbalsweep gen   --config base.toml --seed 1 --runs 30 --out scenarios/
    gimbalsweep plan  --config base.toml --seed 1 --out plan/
    gimbalsweep run   --config base.toml --seed 1 --strategies adaptive --out run/
    gimbalsweep batch --config base.toml --seed 1 --runs 30 --out results/
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .belief_map import save_prior_map
from .config import ConfigError, ScenarioConfig, generate_scenarios, load_config
from .global_planner import plan_global, save_trajectory
from .harness import emit_results, run_batch
from .simulator import Strategy, run_scenario, write_series

log = logging.getLogger("gimbalsweep")


def _strategies(text):
    if text is None:
        return None
    out = tuple(s.strip() for s in text.split(",") if s.strip())
    for s in out:
        try:
            Strategy(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"unknown strategy {s!r}") from None
    return out


def _load(args) -> ScenarioConfig:
    return load_config(args.config) if args.config else ScenarioConfig()


def _single(cfg: ScenarioConfig, seed) -> ScenarioConfig:
    """A concrete scenario: keep a fixed start if the config has one, else draw it."""
    if cfg.start.x is not None and cfg.start.y is not None:
        if seed is not None:
            cfg = dataclasses.replace(cfg, run=dataclasses.replace(cfg.run, seed=seed))
        return cfg
    return generate_scenarios(cfg, 1, cfg.run.seed if seed is None else seed)[0]


def cmd_gen(args) -> int:
    cfg = _load(args)
    seed = cfg.run.seed if args.seed is None else args.seed
    n = cfg.run.runs if args.runs is None else args.runs
    out = Path(args.out or "scenarios")
    out.mkdir(parents=True, exist_ok=True)
    for i, c in enumerate(generate_scenarios(cfg, n, seed)):
        (out / f"scenario{i:03d}_seed{c.run.seed}.json").write_text(c.dumps() + "\n")
    print(f"wrote {n} scenarios to {out}")
    return 0


def cmd_plan(args) -> int:
    cfg = _single(_load(args), args.seed)
    grid = cfg.build_grid()
    plan = plan_global(cfg.start_state(), grid, cfg.sensor_model(), cfg.planner_params(), cfg.run.seed)
    out = Path(args.out or "plan")
    out.mkdir(parents=True, exist_ok=True)
    save_trajectory(plan, out / f"plan_seed{cfg.run.seed}.txt")
    save_prior_map(grid, out / f"prior_seed{cfg.run.seed}.txt")
    (out / f"scenario_seed{cfg.run.seed}.json").write_text(cfg.dumps() + "\n")
    print(f"plan: {len(plan)} waypoints, cost {plan.cost:.1f} m -> {out}")
    return 0


def cmd_run(args) -> int:
    cfg = _single(_load(args), args.seed)
    strategies = args.strategies or cfg.run.strategies
    grid = cfg.build_grid()
    plan = plan_global(cfg.start_state(), grid, cfg.sensor_model(), cfg.planner_params(), cfg.run.seed)
    out = Path(args.out or "run")
    out.mkdir(parents=True, exist_ok=True)
    for s in strategies[:1]:
        res = run_scenario(grid, plan, s, cfg.sim_config(), cfg.run.seed)
        write_series(res, out / f"run_seed{cfg.run.seed}_{s}.csv")
        print(f"{s}: final reduction {res.final_pct:.2f}% over {res.duration:.1f} s")
    return 0


def cmd_batch(args) -> int:
    cfg = _load(args)
    seed = cfg.run.seed if args.seed is None else args.seed
    n = cfg.run.runs if args.runs is None else args.runs
    strategies = args.strategies or cfg.run.strategies
    configs = generate_scenarios(cfg, n, seed)
    summary = run_batch(configs, strategies, workers=args.workers or cfg.run.workers)
    out = Path(args.out or cfg.run.out_dir)
    emit_results(summary, out)
    for row in summary.aggregate:
        print(f"{row['strategy']:>17s}  {row['mean_final_pct']:7.2f}%  "
              f"[{row['ci_lo']:.2f}, {row['ci_hi']:.2f}]  {row['mean_rate_per_s']:.4f} %/s")
    for row in summary.differences:
        print(f"{row['strategy']} - {row['baseline']}: {row['mean_diff']:+.2f} "
              f"[{row['ci_lo']:+.2f}, {row['ci_hi']:+.2f}]")
    if summary.failures:
        print(f"{len(summary.failures)} runs failed (see summary.json)", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gimbalsweep", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)
    for name, fn, help_ in (("gen", cmd_gen, "generate randomized scenario configs"),
                            ("plan", cmd_plan, "global plan only"),
                            ("run", cmd_run, "one scenario, one strategy"),
                            ("batch", cmd_batch, "Monte-Carlo comparison of strategies")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", type=Path, help="TOML or JSON scenario file")
        sp.add_argument("--seed", type=int, help="master seed (default: run.seed)")
        sp.add_argument("--runs", type=int, help="number of scenarios (default: run.runs)")
        sp.add_argument("--strategies", type=_strategies, help="comma-separated list")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--workers", type=int, help="parallel worker processes (batch)")
        sp.set_defaults(fn=fn)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.runs is not None and args.runs < 1:
        print("error: --runs must be at least 1", file=sys.stderr)
        return 2
    try:
        return args.fn(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
