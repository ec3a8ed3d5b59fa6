"""Experiment orchestration: per-seed runs, aggregation, delay sweeps, verification."""
from __future__ import annotations

import csv
import json
import logging
import math
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .baselines import SarsaParams, pendulum_discretizer, run_pendulum_tabular, tabular_curve
from .delay import wrap_delayed
from .dida import BetaSchedule, DidaParams, run_dida
from .envs import PendulumEnv, make_env
from .errors import ConfigurationError, UsageError
from .experts import make_expert
from .model import ModelConfig
from .theory import SUITES, Report

log = logging.getLogger(__name__)

CURVE_FIELDS = ["iteration", "env_steps", "mean_return", "std_return", "train_loss", "seed", "config_hash"]
AGG_FIELDS = ["iteration", "env_steps", "mean_return", "std_return", "n_seeds", "config_hash"]


def _fmt(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_csv(path, rows: list[dict], fields: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for row in rows:
            w.writerow([_fmt(row[f]) for f in fields])


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run_seed(cfg: dict, seed: int) -> list[dict]:
    """One learning run; returns its curve rows."""
    h = cfgmod.config_hash(cfg)
    env = make_env(cfg["env.name"], **cfgmod.env_params(cfg))
    algo = cfg["algorithm"]
    if algo == "dida":
        expert = make_expert(cfg["expert.name"], env)
        params = DidaParams(
            delay=cfg["delay"],
            iterations=int(cfg["dida.iterations"]),
            steps_per_iteration=int(cfg["dida.steps_per_iteration"]),
            retention=int(cfg["dida.retention"]),
            eval_steps=int(cfg["dida.eval_steps"]),
            beta=BetaSchedule(cfg["dida.beta_rule"], cfg["dida.beta_first"], cfg["dida.beta_value"],
                              cfg["dida.beta_decay"]),
            model=ModelConfig(tuple(cfg["dida.hidden"]), cfg["dida.lr"], int(cfg["dida.batch_size"]),
                              int(cfg["dida.epochs"])),
            expert_steps=int(cfg["expert.training_steps"]) if cfg["dida.include_expert_steps"] else 0,
        )
        return run_dida(params, env, expert, seed=seed, config_hash=h).curve
    params = SarsaParams(
        variant=algo, delay=int(cfg["delay"]), alpha=cfg["sarsa.alpha"], gamma=cfg["sarsa.gamma"],
        lam=cfg["sarsa.lam"], eps=cfg["sarsa.eps"], iterations=int(cfg["sarsa.iterations"]),
        steps_per_iteration=int(cfg["sarsa.steps_per_iteration"]),
        eval_steps=int(cfg["sarsa.eval_steps"]), bins=int(cfg["sarsa.bins"]),
        memory_cap=int(cfg["sarsa.memory_cap"]),
    )
    if isinstance(env, PendulumEnv) and env.noise is None:
        curve, _ = run_pendulum_tabular(params, seed=seed, episode_length=env.episode_length or 200,
                                        config_hash=h)
        return curve
    disc = pendulum_discretizer(params.bins) if isinstance(env, PendulumEnv) else None
    curve, _ = tabular_curve(wrap_delayed(env, params.delay, seed=seed), params, seed, disc, h)
    return curve


def aggregate(curves: list[list[dict]], h: str) -> list[dict]:
    rows = []
    for i in range(min(len(c) for c in curves)):
        vals = np.array([float(c[i]["mean_return"]) for c in curves])
        rows.append({
            "iteration": int(curves[0][i]["iteration"]),
            "env_steps": int(curves[0][i]["env_steps"]),
            "mean_return": float(vals.mean()),
            "std_return": float(vals.std()),
            "n_seeds": len(curves),
            "config_hash": h,
        })
    return rows


@dataclass
class RunResult:
    output_dir: Path
    curves: dict
    aggregate: list[dict]
    failed: bool = False


def _seed_task(args):
    cfg, seed = args
    return seed, run_seed(cfg, seed)


def run(cfg: dict, output_dir=None) -> RunResult:
    """Run every seed, write per-seed and aggregate CSVs. On failure, write what
    finished plus ``error.json`` and re-raise."""
    out = Path(output_dir or cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    h = cfgmod.config_hash(cfg)
    (out / "config.toml").write_text(cfgmod.dumps_toml({**cfg, "output_dir": str(out)}))
    seeds = list(cfg["seeds"])
    curves: dict[int, list[dict]] = {}
    try:
        if int(cfg.get("workers", 1)) > 1 and len(seeds) > 1:
            with ProcessPoolExecutor(max_workers=int(cfg["workers"])) as pool:
                for seed, curve in pool.map(_seed_task, [(cfg, s) for s in seeds]):
                    curves[seed] = curve
                    write_csv(out / f"curve_seed{seed}.csv", curve, CURVE_FIELDS)
        else:
            for seed in seeds:
                log.info("running %s seed %d", cfg["algorithm"], seed)
                curves[seed] = run_seed(cfg, seed)
                write_csv(out / f"curve_seed{seed}.csv", curves[seed], CURVE_FIELDS)
    except Exception as exc:
        (out / "error.json").write_text(json.dumps({
            "config_hash": h, "completed_seeds": sorted(curves), "error": type(exc).__name__,
            "message": str(exc), "traceback": traceback.format_exc(),
        }, indent=1))
        if curves:
            write_csv(out / "aggregate.csv", aggregate(list(curves.values()), h), AGG_FIELDS)
        raise
    agg = aggregate([curves[s] for s in seeds], h)
    write_csv(out / "aggregate.csv", agg, AGG_FIELDS)
    return RunResult(out, curves, agg)


def audit(output_dir) -> bool:
    """Recompute the aggregate from per-seed files and compare."""
    out = Path(output_dir)
    files = sorted(out.glob("curve_seed*.csv"))
    if not files:
        raise UsageError(f"no per-seed curves in {out}")
    curves = [read_csv(f) for f in files]
    stored = read_csv(out / "aggregate.csv")
    recomputed = aggregate(curves, stored[0]["config_hash"] if stored else "")
    if len(stored) != len(recomputed):
        return False
    for a, b in zip(stored, recomputed):
        for k in ("mean_return", "std_return"):
            if not math.isclose(float(a[k]), b[k], rel_tol=1e-12, abs_tol=1e-12):
                return False
    return True


def sweep_delay(cfg: dict, delays, output_dir=None) -> list[dict]:
    """Same hyperparameters at every delay; final-iteration return across seeds."""
    out = Path(output_dir or cfg["output_dir"])
    rows = []
    for d in sorted(delays):
        sub = dict(cfg, delay=d)
        cfgmod.validate(sub)
        res = run(sub, out / f"delay_{_fmt(d)}")
        finals = np.array([float(c[-1]["mean_return"]) for c in res.curves.values()])
        rows.append({"delay": d, "mean_final_return": float(finals.mean()), "std": float(finals.std()),
                     "n_seeds": len(finals), "config_hash": cfgmod.config_hash(sub)})
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "sweep.csv", rows, ["delay", "mean_final_return", "std", "n_seeds", "config_hash"])
    return rows


def verify(suite: str, output_dir=None, **kwargs) -> Report:
    if suite not in SUITES:
        raise UsageError(f"unknown verification suite {suite!r}; choose from {sorted(SUITES)}")
    report = SUITES[suite](**kwargs)
    if output_dir is not None:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        report.to_jsonl(out / f"{suite}.jsonl")
        (out / f"{suite}_summary.txt").write_text(report.summary() + "\n")
    return report


__all__ = ["ConfigurationError", "RunResult", "aggregate", "audit", "read_csv", "run", "run_seed",
           "sweep_delay", "verify", "write_csv"]
