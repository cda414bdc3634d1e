"""Command-line interface.

Subcommands: gen (instance files), run (single run), bench (full sweep),
oracle (reachability closures), gamma (information-gain tables), bounds
(sample-complexity diagnostics), plot (SVG charts from an aggregate file).

A flat key-value config file (``key = value`` per line, ``#`` comments) may
supply defaults for any flag; explicit flags win.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .algorithms import (ALGORITHMS, RunConfig, StageSwitch, theorem1_tstar,
                         theorem2_Y)
from .confidence import BetaSchedule
from .harness import (BenchmarkPlan, run_benchmark, run_seed, trace_rows,
                      RUN_HEADER, load_aggregate)
from .info_gain import estimate_gamma, save_gamma
from .reachability import ReachabilityQuery, reach_closure
from .synthetic import SCENARIOS, load_instance, make_instance, save_instance


def read_config_file(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            if not value:
                key, _, value = line.partition(" ")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--T", type=int, default=100)
    p.add_argument("--T0", type=int, default=None,
                   help="fixed expansion horizon (default: plateau rule)")
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--zeta", type=float, default=0.01)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--B", type=float, default=2.0)
    p.add_argument("--variant", choices=["lipschitz", "gp_only"],
                   default="lipschitz")
    p.add_argument("--acquisition", choices=["ucb", "ei", "mpi"],
                   default="ucb")
    p.add_argument("--feedback", choices=["absolute", "dueling"],
                   default="absolute")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="flat key-value config file")


def _config_from_args(args) -> RunConfig:
    switch = (StageSwitch(kind="fixed", t0=args.T0) if args.T0 is not None
              else StageSwitch())
    return RunConfig(T=args.T, stage_switch=switch, epsilon=args.eps,
                     zeta=args.zeta, B=args.B, delta=args.delta,
                     acquisition=args.acquisition, variant=args.variant,
                     feedback=args.feedback, seed=args.seed)


def _apply_config_file(parser, argv):
    """Pre-parse --config and fold the file's values in as defaults."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if known.config:
        values = read_config_file(known.config)
        defaults = {}
        for action in parser._actions:
            key = action.dest
            if key in values:
                defaults[key] = (action.type(values[key]) if action.type
                                 else values[key])
        parser.set_defaults(**defaults)


def cmd_gen(argv) -> int:
    p = argparse.ArgumentParser(prog="stageopt gen")
    p.add_argument("--scenario", choices=SCENARIOS, default="one_safety")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.add_argument("--config")
    _apply_config_file(p, argv)
    args = p.parse_args(argv)
    os.makedirs(args.out, exist_ok=True)
    for i in range(args.count):
        inst = make_instance(args.scenario, args.seed + i)
        path = os.path.join(args.out, f"instance_{args.scenario}_{i:03d}.txt")
        save_instance(inst, path)
        print(path)
    return 0


def cmd_run(argv) -> int:
    p = argparse.ArgumentParser(prog="stageopt run")
    p.add_argument("--instance", required=True)
    p.add_argument("--algorithm", choices=sorted(ALGORITHMS), default="stageopt")
    p.add_argument("--seed-id", type=int, default=0,
                   help="which stored safe seed to start from")
    p.add_argument("--out", default="-")
    _add_run_flags(p)
    _apply_config_file(p, argv)
    args = p.parse_args(argv)
    inst = load_instance(args.instance)
    config = _config_from_args(args)
    from dataclasses import replace
    config = replace(config, start_index=int(
        inst.seed_indices[args.seed_id % len(inst.seed_indices)]))
    trace = ALGORITHMS[args.algorithm](inst, config)
    lines = trace_rows(trace, inst.scenario, 0, args.seed_id)
    text = RUN_HEADER + "\n" + "\n".join(lines) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    print(f"# recommended_index={trace.recommended_index} "
          f"best_observed={trace.best_observed!r}", file=sys.stderr)
    return 0


def cmd_bench(argv) -> int:
    p = argparse.ArgumentParser(prog="stageopt bench")
    p.add_argument("--scenario", action="append", choices=SCENARIOS,
                   dest="scenarios")
    p.add_argument("--algorithm", action="append",
                   choices=sorted(ALGORITHMS), dest="algorithms")
    p.add_argument("--instances", type=int, default=30)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="bench_out")
    _add_run_flags(p)
    _apply_config_file(p, argv)
    args = p.parse_args(argv)
    plan = BenchmarkPlan(
        scenarios=tuple(args.scenarios or ["one_safety"]),
        algorithms=tuple(args.algorithms or ["stageopt", "safeopt"]),
        instances_per_scenario=args.instances,
        seeds_per_instance=args.seeds, T=args.T,
        master_seed=args.master_seed, jobs=args.jobs, out_dir=args.out,
        base_config=_config_from_args(args))
    runs_path, agg_path = run_benchmark(plan)
    print(runs_path)
    print(agg_path)
    return 0


def cmd_oracle(argv) -> int:
    p = argparse.ArgumentParser(prog="stageopt oracle")
    p.add_argument("--instance", required=True)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--seed-id", type=int, default=0)
    p.add_argument("--out", default="-")
    p.add_argument("--config")
    _apply_config_file(p, argv)
    args = p.parse_args(argv)
    inst = load_instance(args.instance)
    query = ReachabilityQuery(domain=inst.domain, safety_values=inst.g_true,
                              thresholds=inst.spec.thresholds,
                              lipschitz=inst.spec.lipschitz, epsilon=args.eps)
    start = inst.domain.mask_from_indices(
        [inst.seed_indices[args.seed_id % len(inst.seed_indices)]])
    closure = reach_closure(query, start)
    text = "\n".join(str(i) for i in np.flatnonzero(closure)) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    print(f"# closure_size={int(closure.sum())}", file=sys.stderr)
    return 0


def cmd_gamma(argv) -> int:
    p = argparse.ArgumentParser(prog="stageopt gamma")
    p.add_argument("--instance", required=True)
    p.add_argument("--function", default="utility",
                   help="'utility' or a safety index")
    p.add_argument("--T", type=int, default=100)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    _apply_config_file(p, argv)
    args = p.parse_args(argv)
    inst = load_instance(args.instance)
    if args.function == "utility":
        spec, noise = inst.utility_kernel, inst.noise_variance
    else:
        spec, noise = inst.safety_kernels[int(args.function)], inst.safety_noise
    table = estimate_gamma(spec, inst.domain, noise, args.T)
    save_gamma(table, args.out)
    print(args.out)
    return 0


def cmd_bounds(argv) -> int:
    p = argparse.ArgumentParser(prog="stageopt bounds")
    p.add_argument("--instance", required=True)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--zeta", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--B", type=float, default=2.0)
    p.add_argument("--seed-id", type=int, default=0)
    p.add_argument("--cap", type=int, default=100_000)
    p.add_argument("--config")
    _apply_config_file(p, argv)
    args = p.parse_args(argv)
    inst = load_instance(args.instance)
    sigma_u = float(np.sqrt(inst.noise_variance))
    sigma_s = float(np.sqrt(inst.safety_noise))
    n = inst.n_safety
    gamma_safety = estimate_gamma(inst.safety_kernels[0], inst.domain,
                                  inst.safety_noise, max(n * 200, 200)).values
    gamma_utility = estimate_gamma(inst.utility_kernel, inst.domain,
                                   inst.noise_variance, 200).values
    b_s = args.B * float(np.sqrt(max(k.amplitude for k in inst.safety_kernels)))
    b_u = args.B * float(np.sqrt(inst.utility_kernel.amplitude))
    sched_s = BetaSchedule(b_s, sigma_s, args.delta, gamma_safety)
    sched_u = BetaSchedule(b_u, sigma_u, args.delta, gamma_utility)
    query = ReachabilityQuery(domain=inst.domain, safety_values=inst.g_true,
                              thresholds=inst.spec.thresholds,
                              lipschitz=inst.spec.lipschitz, epsilon=0.0)
    start = inst.domain.mask_from_indices(
        [inst.seed_indices[args.seed_id % len(inst.seed_indices)]])
    closure = int(reach_closure(query, start).sum())
    tstar = theorem1_tstar(sched_s, closure, n, args.eps, cap=args.cap)
    y = theorem2_Y(sched_u, args.zeta, cap=args.cap)
    print(f"closure_size={closure}")
    print(f"tstar={'not-found' if tstar is None else tstar}")
    print(f"Y={'not-found' if y is None else y}")
    return 0


def cmd_plot(argv) -> int:
    p = argparse.ArgumentParser(prog="stageopt plot")
    p.add_argument("--aggregate", required=True)
    p.add_argument("--out", default="plots")
    p.add_argument("--config")
    _apply_config_file(p, argv)
    args = p.parse_args(argv)
    try:
        import matplotlib
        matplotlib.use("svg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib is required for plotting", file=sys.stderr)
        return 1
    rows = load_aggregate(args.aggregate)
    os.makedirs(args.out, exist_ok=True)
    for metric, column in (("reward", "mean_reward"),
                           ("safe_size", "mean_safe_size")):
        fig, ax = plt.subplots()
        keys = sorted({(r["scenario"], r["algorithm"]) for r in rows})
        for scenario, algorithm in keys:
            series = sorted((r["t"], r[column]) for r in rows
                            if r["scenario"] == scenario
                            and r["algorithm"] == algorithm)
            ax.plot([t for t, _ in series], [v for _, v in series],
                    label=f"{scenario}/{algorithm}")
        ax.set_xlabel("iteration")
        ax.set_ylabel(metric.replace("_", " "))
        ax.legend(fontsize=8)
        path = os.path.join(args.out, f"{metric}.svg")
        fig.savefig(path)
        plt.close(fig)
        print(path)
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "run": cmd_run,
    "bench": cmd_bench,
    "oracle": cmd_oracle,
    "gamma": cmd_gamma,
    "bounds": cmd_bounds,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv or argv[0] in ("-h", "--help"):
        print("usage: stageopt {" + ",".join(COMMANDS) + "} [options]")
        return 0 if argv else 2
    cmd = argv[0]
    if cmd not in COMMANDS:
        print(f"unknown subcommand {cmd!r}", file=sys.stderr)
        return 2
    return COMMANDS[cmd](argv[1:])


if __name__ == "__main__":
    raise SystemExit(main())
