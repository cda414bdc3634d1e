"""Benchmark harness: seed derivation, CSV schemas, aggregation math, and
scheduling-independent determinism."""

import numpy as np
import pytest

from stageopt.algorithms import RunConfig, StageSwitch
from stageopt.harness import (AGG_HEADER, RUN_HEADER, BenchmarkPlan,
                              aggregate, derive_seed, error_row,
                              instance_seed, load_aggregate, run_benchmark,
                              run_id, run_seed, trace_rows)
from stageopt.synthetic import make_instance
from stageopt.algorithms import run_stageopt


def tiny_plan(tmp_path, jobs=1, master_seed=0):
    return BenchmarkPlan(
        scenarios=("one_safety",), algorithms=("stageopt", "cei"),
        instances_per_scenario=2, seeds_per_instance=2, T=6,
        master_seed=master_seed, jobs=jobs, out_dir=str(tmp_path / "out"),
        base_config=RunConfig(T=6))


def test_derived_seeds_are_stable_and_distinct():
    a = derive_seed(0, "one_safety", 1, 2, "stageopt")
    b = derive_seed(0, "one_safety", 1, 2, "stageopt")
    c = derive_seed(0, "one_safety", 1, 2, "safeopt")
    assert a == b != c
    assert instance_seed(0, "one_safety", 3) != instance_seed(0, "one_safety", 4)
    assert run_seed(0, "s", 1, 2, "a") != run_seed(1, "s", 1, 2, "a")


def test_run_id_format():
    assert run_id("one_safety", 3, 7, "cei") == "one_safety-i003-s07-cei"


def test_trace_rows_match_header_schema():
    inst = make_instance("one_safety", 1, points_per_axis=8)
    trace = run_stageopt(inst, RunConfig(
        T=4, seed=0, start_index=int(inst.seed_indices[0])))
    rows = trace_rows(trace, "one_safety", 0, 0)
    n_cols = len(RUN_HEADER.split(","))
    assert len(rows) == 4
    for row in rows:
        assert len(row.split(",")) == n_cols


def test_error_row_is_schema_compatible():
    row = error_row("one_safety", 0, 0, "stageopt", "Boom: bad, thing\nx")
    assert len(row.split(",")) == len(RUN_HEADER.split(","))
    assert "error:Boom: bad; thing x" in row


def test_benchmark_outputs_and_row_counts(tmp_path):
    plan = tiny_plan(tmp_path)
    runs_path, agg_path = run_benchmark(plan)
    lines = open(runs_path).read().splitlines()
    assert lines[0] == RUN_HEADER
    assert len(lines) - 1 == plan.total_runs * plan.T
    agg = load_aggregate(agg_path)
    # two algorithms x T iterations of aggregate rows
    assert len(agg) == 2 * plan.T
    for row in agg:
        assert row["n_runs"] == 4


def test_aggregate_math_by_hand(tmp_path):
    path = tmp_path / "runs.csv"
    rows = [
        "a-i000-s00-x,a,0,0,x,1,expand,0,0.0,0.0,,,1,0,1.0,0,0",
        "a-i000-s01-x,a,0,1,x,1,expand,0,0.0,0.0,,,3,0,3.0,1,2",
    ]
    path.write_text(RUN_HEADER + "\n" + "\n".join(rows) + "\n")
    text = aggregate([str(path)])
    line = text.splitlines()[1].split(",")
    assert line[:3] == ["a", "x", "1"]
    assert float(line[3]) == pytest.approx(2.0)        # mean reward
    # stderr = std([1, 3], ddof=1)/sqrt(2) = sqrt(2)/sqrt(2) = 1
    assert float(line[4]) == pytest.approx(1.0)
    assert float(line[5]) == pytest.approx(2.0)        # mean safe size
    assert line[6] == "1" and line[7] == "2" and line[8] == "2"


def test_aggregate_rejects_foreign_schema(tmp_path):
    path = tmp_path / "runs.csv"
    path.write_text("foo,bar\n1,2\n")
    with pytest.raises(ValueError):
        aggregate([str(path)])


def test_error_rows_are_excluded_from_aggregation(tmp_path):
    path = tmp_path / "runs.csv"
    rows = [
        "a-i000-s00-x,a,0,0,x,1,expand,0,0.0,0.0,,,1,0,1.0,0,0",
        error_row("a", 0, 1, "x", "broken"),
    ]
    path.write_text(RUN_HEADER + "\n" + "\n".join(rows) + "\n")
    agg = aggregate([str(path)])
    assert agg.splitlines()[1].endswith(",1")  # n_runs counts only real rows


def test_byte_identical_across_executions_and_parallelism(tmp_path):
    first = run_benchmark(tiny_plan(tmp_path / "a", jobs=1))
    second = run_benchmark(tiny_plan(tmp_path / "b", jobs=1))
    parallel = run_benchmark(tiny_plan(tmp_path / "c", jobs=4))
    ref_runs = open(first[0], "rb").read()
    ref_agg = open(first[1], "rb").read()
    assert open(second[0], "rb").read() == ref_runs
    assert open(parallel[0], "rb").read() == ref_runs
    assert open(second[1], "rb").read() == ref_agg
    assert open(parallel[1], "rb").read() == ref_agg


def test_master_seed_changes_runs(tmp_path):
    a = run_benchmark(tiny_plan(tmp_path / "a", master_seed=0))
    b = run_benchmark(tiny_plan(tmp_path / "b", master_seed=1))
    assert open(a[0]).read() != open(b[0]).read()


def test_overrides_apply_per_algorithm(tmp_path):
    plan = BenchmarkPlan(
        scenarios=("one_safety",), algorithms=("stageopt",),
        instances_per_scenario=1, seeds_per_instance=1, T=5,
        master_seed=0, jobs=1, out_dir=str(tmp_path / "out"),
        base_config=RunConfig(T=5),
        overrides={"stageopt": {
            "stage_switch": StageSwitch(kind="fixed", t0=1)}})
    runs_path, _ = run_benchmark(plan)
    lines = open(runs_path).read().splitlines()[1:]
    stages = [line.split(",")[6] for line in lines]
    assert all(s == "optimize" for s in stages[1:])
