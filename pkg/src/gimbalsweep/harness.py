"""Monte-Carlo batch evaluation and result emission.

Each config gets one global plan, shared by every strategy run on it, so
strategy differences are paired on the same map, start and path. Confidence
intervals use the normal approximation: mean +/- z * sd / sqrt(n).
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import statistics
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .global_planner import plan_global, save_trajectory
from .simulator import SERIES_COLUMNS, RunResult, Strategy, run_scenario, write_series

log = logging.getLogger(__name__)

Z95 = statistics.NormalDist().inv_cdf(0.975)

AGGREGATE_COLUMNS = ("strategy", "mean_final_pct", "ci_lo", "ci_hi", "mean_rate_per_s")
DIFF_COLUMNS = ("strategy", "baseline", "mean_diff", "ci_lo", "ci_hi", "n")
RUN_COLUMNS = ("run", "seed", "strategy", "final_pct", "rate_per_s", "duration")


class RunFailureWarning(RuntimeWarning):
    """A single run raised; it is excluded from the aggregates."""


def mean_ci(values, z: float = Z95):
    """(mean, lo, hi) with a normal-approximation interval; nan for no data."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        return math.nan, math.nan, math.nan
    m = float(np.mean(x))
    if x.size < 2:
        return m, m, m
    half = z * float(np.std(x, ddof=1)) / math.sqrt(x.size)
    return m, m - half, m + half


@dataclass
class RunRecord:
    run: int
    seed: int
    strategy: str
    result: RunResult | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.result is not None


@dataclass
class BatchSummary:
    strategies: tuple
    records: list = field(default_factory=list)
    plans: dict = field(default_factory=dict)  # run index -> Trajectory
    aggregate: list = field(default_factory=list)
    differences: list = field(default_factory=list)
    mean_series: dict = field(default_factory=dict)

    @property
    def failures(self) -> list:
        return [r for r in self.records if not r.ok]

    def finals(self, strategy: str) -> dict:
        """run index -> final percent reduction for successful runs."""
        return {r.run: r.result.final_pct for r in self.records if r.ok and r.strategy == strategy}


def _run_config(job):
    """Worker: plan once, then fly every strategy on the shared plan."""
    run, cfg, strategies = job
    seed = cfg.run.seed
    out = []
    try:
        grid = cfg.build_grid()
        plan = plan_global(cfg.start_state(), grid, cfg.sensor_model(), cfg.planner_params(), seed)
        sim = cfg.sim_config()
    except Exception as exc:  # noqa: BLE001 - a bad config only loses its own runs
        msg = f"{type(exc).__name__}: {exc}"
        return run, None, [RunRecord(run, seed, s, None, msg) for s in strategies]
    for s in strategies:
        try:
            out.append(RunRecord(run, seed, s, run_scenario(grid, plan, s, sim, seed)))
        except Exception as exc:  # noqa: BLE001
            out.append(RunRecord(run, seed, s, None, f"{type(exc).__name__}: {exc}"))
    return run, plan, out


def run_batch(configs, strategies=None, workers: int = 1) -> BatchSummary:
    """Run every strategy on every config and aggregate the results.

    Failed runs are kept as records with an error message, reported with a
    warning, and left out of all statistics.
    """
    if strategies is None:
        strategies = configs[0].run.strategies if configs else tuple(s.value for s in Strategy)
    strategies = tuple(Strategy(s).value for s in strategies)
    jobs = [(i, cfg, strategies) for i, cfg in enumerate(configs)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_config, jobs))
    else:
        results = [_run_config(j) for j in jobs]
    results.sort(key=lambda r: r[0])

    summary = BatchSummary(strategies)
    for run, plan, recs in results:
        if plan is not None:
            summary.plans[run] = plan
        summary.records.extend(recs)
    for r in summary.failures:
        warnings.warn(f"run {r.run} (seed {r.seed}, {r.strategy}) failed: {r.error}",
                      RunFailureWarning, stacklevel=2)
    _aggregate(summary)
    return summary


def _aggregate(summary: BatchSummary) -> None:
    ok = [r for r in summary.records if r.ok]
    for s in dict.fromkeys(summary.strategies):
        recs = [r for r in ok if r.strategy == s]
        if not recs:
            continue
        m, lo, hi = mean_ci([r.result.final_pct for r in recs])
        rate = float(np.mean([r.result.rate_per_s for r in recs]))
        summary.aggregate.append({"strategy": s, "mean_final_pct": m, "ci_lo": lo, "ci_hi": hi,
                                  "mean_rate_per_s": rate, "n": len(recs)})

    # paired differences: adaptive (else the first listed) minus each other entry
    names = list(summary.strategies)
    k = names.index(Strategy.ADAPTIVE.value) if Strategy.ADAPTIVE.value in names else 0
    lead = names[k]
    a = summary.finals(lead)
    for j, s in enumerate(names):
        if j == k:
            continue
        b = summary.finals(s)
        common = sorted(set(a) & set(b))
        if not common:
            continue
        m, lo, hi = mean_ci([a[i] - b[i] for i in common])
        summary.differences.append({"strategy": lead, "baseline": s, "mean_diff": m,
                                    "ci_lo": lo, "ci_hi": hi, "n": len(common)})

    summary.mean_series = _mean_series(summary, ok)


def _mean_series(summary: BatchSummary, ok) -> dict:
    """Mean percent reduction per strategy on a common time grid.

    Runs that end early hold their final value.
    """
    if not ok:
        return {"t": []}
    t_end = max(r.result.series["t"][-1] for r in ok)
    dts = [np.diff(r.result.series["t"]).min() for r in ok if len(r.result.series["t"]) > 1]
    dt = min(dts) if dts else 1.0
    n = int(round(t_end / dt)) + 1
    t = np.linspace(0.0, dt * (n - 1), n)
    out = {"t": t.tolist()}
    for s in summary.strategies:
        rows = [np.interp(t, r.result.series["t"], r.result.series["pct_reduction"])
                for r in ok if r.strategy == s]
        out[s] = np.mean(rows, axis=0).tolist() if rows else [math.nan] * n
    return out


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def emit_results(summary: BatchSummary, out_dir) -> list[Path]:
    """Write the summary tree under ``out_dir``; returns the files written.

    Per-run series go to ``runs/run<idx>_seed<seed>_<strategy>.csv`` so any
    run can be replayed from its seed.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"{out}: directory is not writable")
    runs_dir = out / "runs"
    runs_dir.mkdir(exist_ok=True)
    written = []

    def table(name, columns, rows):
        path = out / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(columns)
            for row in rows:
                w.writerow([_fmt(row[c]) for c in columns])
        written.append(path)

    table("aggregate.csv", AGGREGATE_COLUMNS, summary.aggregate)
    table("differences.csv", DIFF_COLUMNS, summary.differences)
    run_rows = [{"run": r.run, "seed": r.seed, "strategy": r.strategy,
                 "final_pct": r.result.final_pct, "rate_per_s": r.result.rate_per_s,
                 "duration": r.result.duration} for r in summary.records if r.ok]
    table("runs.csv", RUN_COLUMNS, run_rows)

    ms = summary.mean_series or {"t": []}
    cols = ("t",) + tuple(summary.strategies)
    path = out / "mean_series.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for i in range(len(ms["t"])):
            w.writerow([repr(float(ms[c][i])) for c in cols])
    written.append(path)

    path = out / "replans.jsonl"
    with open(path, "w") as fh:
        for r in summary.records:
            if r.ok:
                for rec in r.result.replans:
                    fh.write(json.dumps({"run": r.run, "seed": r.seed, **rec}, sort_keys=True) + "\n")
    written.append(path)

    for r in summary.records:
        if r.ok:
            p = runs_dir / f"run{r.run:03d}_seed{r.seed}_{r.strategy}.csv"
            write_series(r.result, p)
            written.append(p)
    for run, plan in sorted(summary.plans.items()):
        p = runs_dir / f"run{run:03d}_plan.txt"
        save_trajectory(plan, p)
        written.append(p)

    doc = {
        "strategies": list(summary.strategies),
        "aggregate": summary.aggregate,
        "differences": summary.differences,
        "runs": run_rows,
        "failures": [{"run": r.run, "seed": r.seed, "strategy": r.strategy, "error": r.error}
                     for r in summary.failures],
        "ci": "normal approximation, 95%",
    }
    path = out / "summary.json"
    path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
    written.append(path)
    return written


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj
