"""Benchmark orchestration: deterministic seeded sweeps over (scenario,
instance, seed, algorithm), per-run CSV rows, and aggregation.

Per-run seeds are derived by hashing the master seed together with the run
coordinates, so results are independent of scheduling order and adding an
algorithm never perturbs existing runs.
"""

from __future__ import annotations

import csv
import hashlib
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .algorithms import ALGORITHMS, RunConfig, Trace
from .synthetic import ProblemInstance, make_instance

RUN_HEADER = ("run_id,scenario,instance_id,seed_id,algorithm,t,stage,x_index,"
              "y_f,y_g1,y_g2,y_g3,safe_size,expander_size,reward,violation,"
              "contradictions")
AGG_HEADER = ("scenario,algorithm,t,mean_reward,stderr_reward,mean_safe_size,"
              "violations,contradictions,n_runs")
MAX_SAFETY_COLUMNS = 3


@dataclass
class BenchmarkPlan:
    scenarios: Sequence[str] = ("one_safety",)
    algorithms: Sequence[str] = ("stageopt", "safeopt")
    instances_per_scenario: int = 30
    seeds_per_instance: int = 10
    T: int = 100
    master_seed: int = 0
    jobs: int = 1
    out_dir: str = "bench_out"
    base_config: RunConfig = field(default_factory=RunConfig)
    overrides: Dict[str, dict] = field(default_factory=dict)

    @property
    def total_runs(self) -> int:
        return (len(self.scenarios) * self.instances_per_scenario
                * self.seeds_per_instance * len(self.algorithms))


def derive_seed(*parts) -> int:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "little")


def instance_seed(master_seed: int, scenario: str, instance_id: int) -> int:
    return derive_seed(master_seed, scenario, instance_id, "instance")


def run_seed(master_seed: int, scenario: str, instance_id: int, seed_id: int,
             algorithm: str) -> int:
    return derive_seed(master_seed, scenario, instance_id, seed_id, algorithm)


def run_id(scenario: str, instance_id: int, seed_id: int, algorithm: str) -> str:
    return f"{scenario}-i{instance_id:03d}-s{seed_id:02d}-{algorithm}"


def _fmt(value: float) -> str:
    return repr(float(value))


def trace_rows(trace: Trace, scenario: str, instance_id: int,
               seed_id: int) -> List[str]:
    rid = run_id(scenario, instance_id, seed_id, trace.algorithm)
    out = []
    for r in trace.rows:
        y_g = [_fmt(v) for v in r.y_g] + [""] * (MAX_SAFETY_COLUMNS - len(r.y_g))
        out.append(",".join([
            rid, scenario, str(instance_id), str(seed_id), trace.algorithm,
            str(r.t), r.stage, str(r.x_index), _fmt(r.y_f), *y_g,
            str(r.safe_size), str(r.expander_size), _fmt(r.reward),
            str(r.violation), str(r.contradictions)]))
    return out


def error_row(scenario: str, instance_id: int, seed_id: int, algorithm: str,
              message: str) -> str:
    rid = run_id(scenario, instance_id, seed_id, algorithm)
    note = message.replace(",", ";").replace("\n", " ")
    return ",".join([rid, scenario, str(instance_id), str(seed_id), algorithm,
                     "0", f"error:{note}", "-1", "", "", "", "", "0", "0", "",
                     "0", "0"])


def _task(args) -> Tuple[Tuple[str, int, str], List[str]]:
    """Worker: all seeds of one (scenario, instance, algorithm) cell."""
    plan_fields, scenario, instance_id, algorithm = args
    (instances_per_scenario, seeds_per_instance, T, master_seed,
     base_config, overrides) = plan_fields
    inst = make_instance(scenario, instance_seed(master_seed, scenario, instance_id),
                         seeds_per_instance=seeds_per_instance)
    config = base_config
    if algorithm in overrides:
        config = replace(config, **overrides[algorithm])
    config = replace(config, T=T)
    lines: List[str] = []
    for seed_id in range(seeds_per_instance):
        run_config = replace(
            config,
            seed=run_seed(master_seed, scenario, instance_id, seed_id, algorithm),
            start_index=int(inst.seed_indices[seed_id % len(inst.seed_indices)]))
        try:
            trace = ALGORITHMS[algorithm](inst, run_config)
            lines.extend(trace_rows(trace, scenario, instance_id, seed_id))
        except Exception as exc:  # noqa: BLE001 - sweep must not abort
            lines.append(error_row(scenario, instance_id, seed_id, algorithm,
                                   f"{type(exc).__name__}: {exc}"))
    return (scenario, instance_id, algorithm), lines


def run_benchmark(plan: BenchmarkPlan) -> Tuple[str, str]:
    """Execute the plan; returns (runs_csv_path, aggregate_csv_path)."""
    os.makedirs(plan.out_dir, exist_ok=True)
    plan_fields = (plan.instances_per_scenario, plan.seeds_per_instance,
                   plan.T, plan.master_seed, plan.base_config, plan.overrides)
    tasks = [(plan_fields, scenario, instance_id, algorithm)
             for scenario in plan.scenarios
             for instance_id in range(plan.instances_per_scenario)
             for algorithm in plan.algorithms]
    results: Dict[tuple, List[str]] = {}
    if plan.jobs > 1:
        with ProcessPoolExecutor(max_workers=plan.jobs) as pool:
            for key, lines in pool.map(_task, tasks):
                results[key] = lines
    else:
        for t in tasks:
            key, lines = _task(t)
            results[key] = lines

    runs_path = os.path.join(plan.out_dir, "runs.csv")
    with open(runs_path, "w") as fh:
        fh.write(RUN_HEADER + "\n")
        for scenario in plan.scenarios:
            for instance_id in range(plan.instances_per_scenario):
                for algorithm in plan.algorithms:
                    for line in results[(scenario, instance_id, algorithm)]:
                        fh.write(line + "\n")
    agg_path = os.path.join(plan.out_dir, "aggregate.csv")
    with open(agg_path, "w") as fh:
        fh.write(aggregate([runs_path]))
    return runs_path, agg_path


def aggregate(run_csv_paths: Sequence[str]) -> str:
    """Group run rows by (scenario, algorithm, t); means for reward and safe
    size, sums for violation and contradiction counts."""
    groups: Dict[tuple, dict] = {}
    for path in run_csv_paths:
        with open(path) as fh:
            header = fh.readline().rstrip("\n")
            if header != RUN_HEADER:
                raise ValueError(f"run CSV schema mismatch in {path}")
            for row in csv.reader(fh):
                t = int(row[5])
                if t == 0:
                    continue  # error rows carry no per-iteration data
                key = (row[1], row[4], t)
                g = groups.setdefault(key, {
                    "rewards": [], "safe": [], "violations": 0,
                    "contradictions": 0})
                g["rewards"].append(float(row[14]))
                g["safe"].append(float(row[12]))
                g["violations"] += int(row[15])
                g["contradictions"] += int(row[16])
    out = io.StringIO()
    out.write(AGG_HEADER + "\n")
    for key in sorted(groups):
        g = groups[key]
        rewards = np.asarray(g["rewards"])
        n = len(rewards)
        stderr = float(rewards.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        out.write(",".join([
            key[0], key[1], str(key[2]), _fmt(rewards.mean()), _fmt(stderr),
            _fmt(np.mean(g["safe"])), str(g["violations"]),
            str(g["contradictions"]), str(n)]) + "\n")
    return out.getvalue()


def load_aggregate(path) -> List[dict]:
    rows = []
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != AGG_HEADER:
            raise ValueError("aggregate CSV schema mismatch")
        for row in csv.reader(fh):
            rows.append({
                "scenario": row[0], "algorithm": row[1], "t": int(row[2]),
                "mean_reward": float(row[3]), "stderr_reward": float(row[4]),
                "mean_safe_size": float(row[5]), "violations": int(row[6]),
                "contradictions": int(row[7]), "n_runs": int(row[8])})
    return rows


def runs_with_violations(runs_csv_path: str) -> Tuple[int, int]:
    """(number of runs containing at least one violation, total runs)."""
    violated = set()
    all_runs = set()
    with open(runs_csv_path) as fh:
        fh.readline()
        for row in csv.reader(fh):
            all_runs.add(row[0])
            if row[15] == "1":
                violated.add(row[0])
    return len(violated), len(all_runs)
