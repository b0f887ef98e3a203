"""Command-line front end.

Subcommands cover the whole pipeline: validate a build spec, estimate run
times, run the genetic search, simulate a fixed priority list, repair a list,
generate synthetic builds, and run the benchmark suites.  Machine-readable
artifacts go to files; a short human summary goes to stdout.

Exit codes: 0 success, 1 bad input (parse or validation), 2 broken contract.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import (
    baseline_evaluate,
    run_test_case_one,
    run_test_case_three,
    run_test_case_two,
    synthetic_suite,
)
from .estimate import EstimatorConfig, RunHistory, estimate_all
from .ga import FitnessValue, FitnessWeights, GaConfig, evolve, fitness_given_maxima, repair_priority_list
from .model import BuildSpecError, ContractViolation, MachineAllocation, max_allocation
from .persistence import (
    build_from_dict,
    generate_synthetic_build,
    load_build_spec,
    load_history,
    schedule_report,
    write_reports,
)
from .sim import Deadlock, simulate


def _add_estimator_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--history", help="run-history JSON file")
    p.add_argument("--quantile", type=float, default=0.75, help="history quantile (default 0.75)")
    p.add_argument("--unknown-lo", type=float, default=60.0, help="min seconds for unseen jobs")
    p.add_argument("--unknown-hi", type=float, default=600.0, help="max seconds for unseen jobs")


def _add_ga_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="rng seed (default 0)")
    p.add_argument("--generations", type=int, default=200)
    p.add_argument("--population", type=int, default=None, help="default: twice the job count")
    p.add_argument("--stagnation", type=int, default=50)
    p.add_argument("--w-rt", type=float, default=1.0, help="run-time weight")
    p.add_argument("--w-mc", type=float, default=0.0, help="machine-count weight")
    p.add_argument("--scaling", choices=["normalized", "literal"], default="normalized")
    p.add_argument("--crossover", choices=["ox", "pmx"], default="ox")
    p.add_argument("--init", choices=["rejection", "repair"], default="repair")
    p.add_argument("--crossover-rate", type=float, default=0.9)
    p.add_argument("--perm-mutation-rate", type=float, default=0.1)
    p.add_argument("--bit-flip-rate", type=float, default=None)
    p.add_argument("--tournament", type=int, default=3)
    p.add_argument("--elites", type=int, default=2)
    p.add_argument("--workers", type=int, default=1, help="parallel fitness workers")


def _estimator_config(args) -> EstimatorConfig:
    return EstimatorConfig(
        quantile_q=args.quantile,
        unknown_range=(args.unknown_lo, args.unknown_hi),
        rng_seed=getattr(args, "seed", 0),
    )


def _ga_config(args) -> GaConfig:
    return GaConfig(
        population_size=args.population,
        max_generations=args.generations,
        stagnation_limit=args.stagnation,
        crossover_rate=args.crossover_rate,
        permutation_mutation_rate=args.perm_mutation_rate,
        bit_flip_rate=args.bit_flip_rate,
        tournament_size=args.tournament,
        elite_count=args.elites,
        crossover_kind=args.crossover,
        init_kind=args.init,
        rng_seed=args.seed,
    )


def _weights(args) -> FitnessWeights:
    return FitnessWeights(w_rt=args.w_rt, w_mc=args.w_mc, scaling=args.scaling)


def _history(args) -> RunHistory:
    return load_history(args.history) if args.history else RunHistory({})


def _read_priority(path: str | None, build) -> list[str]:
    if path is None:
        return list(build.job_names)
    lines = Path(path).read_text().splitlines()
    return [line.strip() for line in lines if line.strip()]


def _parse_alloc(spec: str | None, build) -> MachineAllocation:
    if spec is None:
        return max_allocation(build)
    counts = {}
    for part in spec.split(","):
        if "=" not in part:
            raise BuildSpecError(f"bad allocation entry {part!r}, expected type=count")
        name, _, value = part.partition("=")
        name = name.strip()
        if name not in build.types_by_name:
            raise BuildSpecError(f"allocation names unknown machine type: {name}")
        try:
            counts[name] = int(value)
        except ValueError:
            raise BuildSpecError(f"allocation count for {name} is not an integer: {value!r}")
    for t in build.machine_types:
        counts.setdefault(t.name, t.max_count)
        if not 1 <= counts[t.name] <= t.max_count:
            raise BuildSpecError(
                f"allocation for {t.name} outside [1, {t.max_count}]: {counts[t.name]}"
            )
    return MachineAllocation(counts)


# ---------------------------------------------------------------------------
# Commands


def cmd_validate(args) -> int:
    build = load_build_spec(args.build)
    print(f"ok: {len(build.jobs)} jobs, {len(build.machine_types)} machine types")
    return 0


def cmd_estimate(args) -> int:
    build = load_build_spec(args.build)
    estimates = estimate_all(build, _history(args), _estimator_config(args))
    text = json.dumps(estimates, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_schedule(args) -> int:
    build = load_build_spec(args.build)
    result = evolve(
        build,
        _history(args),
        _weights(args),
        _ga_config(args),
        est_config=_estimator_config(args),
        workers=args.workers,
    )
    report = schedule_report(result.schedule, result.best_fitness, _weights(args), args.seed)
    write_reports(report, result.trace, None, args.out_dir)
    alloc = ", ".join(f"{k}={v}" for k, v in sorted(result.allocation.counts.items()))
    print(f"seed: {args.seed}")
    print(f"generations: {result.generations}")
    print(f"makespan_s: {result.schedule.makespan_s}")
    print(f"allocation: {alloc}")
    print(f"fitness: {result.best_fitness.total}")
    print(f"reports: {args.out_dir}")
    return 0


def cmd_simulate(args) -> int:
    build = load_build_spec(args.build)
    priority = _read_priority(args.priority, build)
    alloc = _parse_alloc(args.alloc, build)
    run_times = estimate_all(build, _history(args), _estimator_config(args))
    verdict = simulate(priority, alloc, build, run_times)
    if isinstance(verdict, Deadlock):
        print("deadlock; unscheduled jobs: " + ", ".join(verdict.unscheduled))
        return 0
    weights = _weights(args)
    fit = fitness_given_maxima(
        verdict.makespan_s, alloc.total(), verdict.makespan_s, alloc.total(), weights
    )
    if args.out_dir:
        write_reports(schedule_report(verdict, fit, weights, args.seed), None, None, args.out_dir)
    print(f"makespan_s: {verdict.makespan_s}")
    return 0


def cmd_repair(args) -> int:
    build = load_build_spec(args.build)
    priority = _read_priority(args.priority, build)
    for name in repair_priority_list(priority, build):
        print(name)
    return 0


def cmd_gen(args) -> int:
    doc = generate_synthetic_build(
        n_jobs=args.jobs,
        edge_prob=args.edge_prob,
        n_types=args.types,
        max_counts=args.max_count,
        runtime_range=(args.runtime_min, args.runtime_max),
        rng_seed=args.seed,
    )
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_bench(args) -> int:
    weights = _weights(args)
    config = _ga_config(args)
    est = _estimator_config(args)
    out_dir = Path(args.out_dir)
    suite = synthetic_suite(
        count=args.builds,
        rng_seed=args.seed,
        jobs_range=(args.jobs_min, args.jobs_max),
        n_types=args.types,
        max_counts=args.max_count,
        edge_prob=args.edge_prob,
        runtime_range=(args.runtime_min, args.runtime_max),
    )
    if args.case == 1:
        rows = run_test_case_one(
            suite, None, weights, config,
            pin_to_baseline=args.pin_allocation, est_config=est, workers=args.workers,
        )
        write_reports(None, None, rows, out_dir)
    elif args.case == 2:
        rows, stats = run_test_case_two(
            suite[0][1], None, weights, config, args.seeds,
            build_id=suite[0][0], est_config=est, workers=args.workers,
        )
        write_reports(None, None, rows, out_dir)
        (out_dir / "stability.json").write_text(json.dumps(stats, indent=2) + "\n")
    else:
        rows, summary = run_test_case_three(
            suite, None, weights, config, est_config=est, workers=args.workers
        )
        write_reports(None, None, rows, out_dir)
        (out_dir / "search_cost.json").write_text(json.dumps(summary, indent=2) + "\n")
    improvements = sorted(r.improvement_pct for r in rows)
    median = improvements[len(improvements) // 2]
    print(f"seed: {args.seed}")
    print(f"rows: {len(rows)}")
    print(f"median improvement_pct: {median}")
    print(f"outputs: {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="buildsched",
        description="Genetic-algorithm scheduler for CI builds: job order plus machine allocation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a build spec for structural errors")
    p.add_argument("--build", required=True, help="build spec JSON file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("estimate", help="print estimated run times per job")
    p.add_argument("--build", required=True)
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.add_argument("--seed", type=int, default=0)
    _add_estimator_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("schedule", help="run the genetic search on a build")
    p.add_argument("--build", required=True)
    p.add_argument("--out-dir", default="buildsched_out")
    _add_estimator_flags(p)
    _add_ga_flags(p)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("simulate", help="simulate a fixed priority list, no search")
    p.add_argument("--build", required=True)
    p.add_argument("--priority", help="text file, one job name per line (default: spec order)")
    p.add_argument("--alloc", help="machine counts, e.g. 'linux=2,windows=1' (default: max)")
    p.add_argument("--out-dir", help="also write schedule_report.json here")
    _add_estimator_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--w-rt", type=float, default=1.0)
    p.add_argument("--w-mc", type=float, default=0.0)
    p.add_argument("--scaling", choices=["normalized", "literal"], default="normalized")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("repair", help="repair a priority list to dependency order")
    p.add_argument("--build", required=True)
    p.add_argument("--priority", help="text file, one job name per line (default: spec order)")
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("gen", help="generate a synthetic build spec")
    p.add_argument("--jobs", type=int, required=True)
    p.add_argument("--types", type=int, default=3)
    p.add_argument("--edge-prob", type=float, default=0.06)
    p.add_argument("--max-count", type=int, default=3)
    p.add_argument("--runtime-min", type=float, default=10.0)
    p.add_argument("--runtime-max", type=float, default=300.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="run one of the three benchmark test cases")
    p.add_argument("--case", type=int, choices=[1, 2, 3], required=True)
    p.add_argument("--out-dir", default="bench_out")
    p.add_argument("--builds", type=int, default=20, help="suite size (cases 1 and 3)")
    p.add_argument("--seeds", type=int, default=10, help="seed count (case 2)")
    p.add_argument("--jobs-min", type=int, default=30)
    p.add_argument("--jobs-max", type=int, default=80)
    p.add_argument("--types", type=int, default=3)
    p.add_argument("--max-count", type=int, default=3)
    p.add_argument("--edge-prob", type=float, default=0.06)
    p.add_argument("--runtime-min", type=float, default=10.0)
    p.add_argument("--runtime-max", type=float, default=300.0)
    p.add_argument("--pin-allocation", action="store_true",
                   help="case 1: pin the GA to the baseline allocation")
    _add_estimator_flags(p)
    _add_ga_flags(p)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; 2 is reserved for contract breaks
        return 1 if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except BuildSpecError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ContractViolation as e:
        print(f"contract violation: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
