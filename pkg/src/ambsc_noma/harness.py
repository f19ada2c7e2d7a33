"""Monte-Carlo sweep runner with CSV output.

One CSV per sweep.  Schema (header always present, floats printed with 9
significant digits):

    <param columns>,seed,stat,ee_coop,ee_noncoop,iterations,penalty_residual,status

Per-seed rows carry stat="" and an integer seed; after each parameter
point three aggregate rows follow (stat in {mean, ci95_lo, ci95_hi},
seed="") computed over the rows with status == "ok".  Failed seeds keep
their row (status carries the failure class) so reruns are reproducible
and auditable.  A run manifest (JSON) records the configuration hash,
seed range, and package version.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import ScenarioConfig
from .errors import ConfigurationError, InfeasibleError
from .pipeline import run_algorithm1, run_noncoop_baseline

FIGURES = ("fig2", "fig3", "fig4", "fig5", "fig6")

_DEF_ITER = list(range(1, 11))
_DEF_N = [8, 16, 24, 32]
_DEF_MN = [(8, 8), (16, 8), (32, 8), (8, 16), (8, 32)]
_DEF_PC = [0.1, 0.25, 0.5, 1.0]
_DEF_PR = [0.01, 0.0316, 0.1]


@dataclass
class SweepSpec:
    figure_id: str
    seeds: int = 100
    baseline: bool = True
    iterations: list = field(default_factory=lambda: list(_DEF_ITER))
    n_list: list = field(default_factory=lambda: list(_DEF_N))
    mn_pairs: list = field(default_factory=lambda: [tuple(p) for p in _DEF_MN])
    p_c_list: list = field(default_factory=lambda: list(_DEF_PC))
    p_r_list: list = field(default_factory=lambda: list(_DEF_PR))

    def __post_init__(self):
        if self.figure_id not in FIGURES:
            raise ConfigurationError(f"figure_id must be one of {FIGURES}")
        if self.seeds < 1:
            raise ConfigurationError("seeds must be >= 1")
        for name in ("iterations", "n_list", "mn_pairs", "p_c_list", "p_r_list"):
            if not getattr(self, name):
                raise ConfigurationError(f"{name} must be nonempty")

    def param_columns(self):
        return {"fig2": ["iteration"], "fig3": ["n"], "fig4": ["m", "n"],
                "fig5": ["p_c"], "fig6": ["p_r"]}[self.figure_id]

    def points(self):
        """Parameter points as tuples aligned with param_columns()."""
        if self.figure_id == "fig2":
            return [()]                       # expands per-iteration later
        if self.figure_id == "fig3":
            return [(n,) for n in self.n_list]
        if self.figure_id == "fig4":
            return [tuple(p) for p in self.mn_pairs]
        if self.figure_id == "fig5":
            return [(pc,) for pc in self.p_c_list]
        return [(pr,) for pr in self.p_r_list]


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def _configure(base: ScenarioConfig, figure_id, point) -> ScenarioConfig:
    cfg = ScenarioConfig.from_dict(base.to_dict())
    if figure_id == "fig3":
        cfg.bst_antennas = int(point[0])
    elif figure_id == "fig4":
        cfg.ap_antennas, cfg.bst_antennas = int(point[0]), int(point[1])
    elif figure_id == "fig5":
        cfg.circuit_power_w = float(point[0])
    elif figure_id == "fig6":
        cfg.relay_power_w = float(point[0])
    return cfg.validate()


def run_single_seed(config: ScenarioConfig, seed: int, baseline: bool):
    """One seed's cooperative (and optional baseline) run, as a plain dict."""
    out = {"seed": seed, "status": "ok", "ee_coop": math.nan,
           "ee_noncoop": math.nan, "iterations": 0, "penalty_residual": math.nan,
           "trace_coop": [], "trace_noncoop": []}
    try:
        res = run_algorithm1(config, np.random.default_rng(seed))
        out["ee_coop"] = res.final_ee
        out["iterations"] = res.trace.converged_at or len(res.trace.ee)
        out["penalty_residual"] = res.trace.penalty_residual[-1]
        out["trace_coop"] = list(res.trace.ee)
    except InfeasibleError as exc:
        out["status"] = f"infeasible:{exc.stage}:{exc.constraint}"
    except Exception as exc:  # degenerate channels etc.; keep the sweep alive
        out["status"] = f"error:{type(exc).__name__}"
    if baseline:
        try:
            res = run_noncoop_baseline(config, np.random.default_rng(seed))
            out["ee_noncoop"] = res.final_ee
            out["trace_noncoop"] = list(res.trace.ee)
        except InfeasibleError as exc:
            out["status"] = (out["status"] if out["status"] != "ok" else
                             f"infeasible_baseline:{exc.stage}:{exc.constraint}")
        except Exception as exc:
            out["status"] = (out["status"] if out["status"] != "ok" else
                             f"error_baseline:{type(exc).__name__}")
    return out


def _seed_task(args):
    cfg_dict, seed, baseline = args
    return run_single_seed(ScenarioConfig.from_dict(cfg_dict), seed, baseline)


def _run_point(config, seeds, baseline, workers):
    tasks = [(config.to_dict(), seed, baseline) for seed in range(seeds)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_seed_task, tasks, chunksize=4))
    else:
        results = [_seed_task(t) for t in tasks]
    return sorted(results, key=lambda r: r["seed"])


def _mean_ci(values):
    values = np.asarray(values, dtype=float)
    values = values[np.isfinite(values)]
    if values.size == 0:
        return math.nan, math.nan, math.nan
    mean = float(values.mean())
    half = 1.96 * float(values.std(ddof=1)) / math.sqrt(values.size) if values.size > 1 else 0.0
    return mean, mean - half, mean + half


def _aggregate_rows(param_vals, rows):
    ok = [r for r in rows if r["status"] == "ok"]
    agg = []
    for stat in ("mean", "ci95_lo", "ci95_hi"):
        coop = _mean_ci([r["ee_coop"] for r in ok])
        noncoop = _mean_ci([r["ee_noncoop"] for r in ok])
        iters = _mean_ci([r["iterations"] for r in ok])
        pres = _mean_ci([r["penalty_residual"] for r in ok])
        idx = ("mean", "ci95_lo", "ci95_hi").index(stat)
        agg.append(list(param_vals) + ["", stat, coop[idx], noncoop[idx],
                                       iters[idx], pres[idx], "ok"])
    return agg


def run_experiment(config: ScenarioConfig, sweep: SweepSpec, out_dir,
                   workers: int = 1):
    """Run one figure's sweep; returns (csv_path, manifest_path, failed_share)."""
    config.validate()
    os.makedirs(out_dir, exist_ok=True)
    param_cols = sweep.param_columns()
    header = param_cols + ["seed", "stat", "ee_coop", "ee_noncoop",
                           "iterations", "penalty_residual", "status"]
    rows = []

    if sweep.figure_id == "fig2":
        results = _run_point(config, sweep.seeds, sweep.baseline, workers)
        horizon = list(sweep.iterations)
        for res in results:
            for it in horizon:
                coop = _trace_at(res["trace_coop"], it)
                noncoop = _trace_at(res["trace_noncoop"], it)
                rows.append([it, res["seed"], "", coop, noncoop,
                             res["iterations"], res["penalty_residual"],
                             res["status"]])
        point_results = {(it,): [r for r in rows if r[0] == it] for it in horizon}
        out_rows = []
        for it in horizon:
            point_rows = [dict(zip(["it", "seed", "stat", "ee_coop", "ee_noncoop",
                                    "iterations", "penalty_residual", "status"], r))
                          for r in point_results[(it,)]]
            out_rows.extend(point_results[(it,)])
            out_rows.extend(_aggregate_rows((it,), point_rows))
        rows = out_rows
        failed = sum(1 for r in results if r["status"] != "ok")
        total = len(results)
    else:
        failed = 0
        total = 0
        out_rows = []
        for point in sweep.points():
            cfg = _configure(config, sweep.figure_id, point)
            results = _run_point(cfg, sweep.seeds, sweep.baseline, workers)
            failed += sum(1 for r in results if r["status"] != "ok")
            total += len(results)
            for res in results:
                out_rows.append(list(point) + [res["seed"], "", res["ee_coop"],
                                               res["ee_noncoop"], res["iterations"],
                                               res["penalty_residual"], res["status"]])
            out_rows.extend(_aggregate_rows(point, results))
        rows = out_rows

    csv_path = os.path.join(out_dir, f"{sweep.figure_id}.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])

    manifest = {
        "figure": sweep.figure_id,
        "config_sha256": hashlib.sha256(
            json.dumps(config.to_dict(), sort_keys=True).encode()).hexdigest(),
        "config": config.to_dict(),
        "seeds": list(range(sweep.seeds)),
        "baseline": sweep.baseline,
        "version": __version__,
        "failed_seeds": failed,
        "total_runs": total,
    }
    manifest_path = os.path.join(out_dir, f"{sweep.figure_id}_manifest.json")
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, manifest_path, (failed / total if total else 0.0)


def _trace_at(trace, iteration):
    """EE after `iteration` outer rounds; converged traces hold their value."""
    if not trace:
        return math.nan
    idx = min(iteration, len(trace)) - 1
    return trace[idx]
