"""Benchmark harness: GA against the original-order baseline, plus an
exhaustive oracle for instances small enough to enumerate.

The baseline mirrors what users do by hand: run the jobs in the order they
wrote them (repaired to feasibility) on as many machines as allowed.  The
three runners compare the search against that baseline across a suite, check
run-to-run stability over seeds, and account for the cost of the search
itself.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

from .estimate import EstimatorConfig, RunHistory, estimate_all
from .ga import (
    FitnessValue,
    FitnessWeights,
    GaConfig,
    evolve,
    fitness_given_maxima,
    repair_priority_list,
)
from .model import (
    Build,
    BuildSpecError,
    Chromosome,
    MachineAllocation,
    encode_machine_counts,
    max_allocation,
    validate_build,
)
from .persistence import BenchmarkRow, build_from_dict, generate_synthetic_build
from .sim import ScheduleResult, SimContext, simulate

BRUTE_FORCE_MAX_JOBS = 8
BRUTE_FORCE_MAX_CHOICES = 10_000

SEARCH_COST_CAVEAT = (
    "combined_s adds simulated build seconds to optimizer wall-clock seconds; "
    "the two are commensurable only on the machine that ran the search"
)


def baseline_evaluate(
    build: Build,
    history: RunHistory | None,
    alloc: Optional[MachineAllocation] = None,
    est_config: EstimatorConfig | None = None,
) -> ScheduleResult:
    """Simulate the user's own job order (repaired) on the given allocation.

    The default allocation is the maximum per type, matching the habit of
    throwing every available machine at a build.
    """
    validate_build(build).raise_if_invalid()
    if alloc is None:
        alloc = max_allocation(build)
    run_times = estimate_all(build, history or RunHistory({}), est_config)
    priority = repair_priority_list(list(build.job_names), build)
    result = simulate(priority, alloc, build, run_times)
    if not isinstance(result, ScheduleResult):
        raise AssertionError("repaired order deadlocked on a validated build")
    return result


@dataclass(frozen=True)
class BruteForceResult:
    fitness: FitnessValue
    witness: Chromosome
    makespan_s: float
    machine_count: int
    max_run_time: float
    max_machine_count: int
    candidates: int

    def fitness_of(self, run_time: float, machine_count: float, weights: FitnessWeights) -> FitnessValue:
        """Score an outside individual against this candidate population."""
        return fitness_given_maxima(
            run_time, machine_count, self.max_run_time, self.max_machine_count, weights
        )


def brute_force_optimum(
    build: Build,
    history: RunHistory | None,
    weights: FitnessWeights,
    est_config: EstimatorConfig | None = None,
) -> BruteForceResult:
    """Exhaustive search over every drainable permutation times every allocation.

    The candidate set doubles as the population for the scaled fitness, so the
    reported optimum is comparable to any individual scored via fitness_of.
    """
    validate_build(build).raise_if_invalid()
    n = len(build.jobs)
    if n == 0 or n > BRUTE_FORCE_MAX_JOBS:
        raise BuildSpecError(f"brute force supports 1..{BRUTE_FORCE_MAX_JOBS} jobs, got {n}")
    choices = math.prod(t.max_count for t in build.machine_types)
    if choices > BRUTE_FORCE_MAX_CHOICES:
        raise BuildSpecError(f"too many allocation choices for brute force: {choices}")

    run_times = estimate_all(build, history or RunHistory({}), est_config)
    ctx = SimContext(build, run_times)
    allocs = list(itertools.product(*(range(1, t.max_count + 1) for t in build.machine_types)))
    evals: list[tuple[float, int, tuple[int, ...], tuple[int, ...]]] = []
    for perm in itertools.permutations(range(n)):
        order = list(perm)
        for counts in allocs:
            makespan_ms, _ = ctx.run(order, counts)
            if makespan_ms is None:
                continue
            evals.append((makespan_ms / 1000.0, sum(counts), perm, counts))
    max_rt = max(e[0] for e in evals)
    max_mc = max(e[1] for e in evals)
    best = None
    best_total = None
    for rt, mc, perm, counts in evals:
        total = fitness_given_maxima(rt, mc, max_rt, max_mc, weights).total
        if best_total is None or total < best_total:
            best_total = total
            best = (rt, mc, perm, counts)
    rt, mc, perm, counts = best
    alloc = MachineAllocation({t.name: c for t, c in zip(build.machine_types, counts)})
    witness = Chromosome(
        priority=tuple(build.jobs[i].name for i in perm),
        machine_bits=encode_machine_counts(alloc, build.machine_types),
    )
    return BruteForceResult(
        fitness=fitness_given_maxima(rt, mc, max_rt, max_mc, weights),
        witness=witness,
        makespan_s=rt,
        machine_count=mc,
        max_run_time=max_rt,
        max_machine_count=max_mc,
        candidates=len(evals),
    )


# ---------------------------------------------------------------------------
# Test-case runners


def synthetic_suite(
    count: int,
    rng_seed: int,
    jobs_range: tuple[int, int] = (30, 80),
    n_types: int = 3,
    max_counts: int | Sequence[int] = 3,
    edge_prob: float = 0.06,
    runtime_range: tuple[float, float] = (10.0, 300.0),
) -> list[tuple[str, Build]]:
    """Seeded suite of synthetic builds with ids stable across runs."""
    import random as _random

    rng = _random.Random(rng_seed)
    lo, hi = jobs_range
    suite = []
    for i in range(count):
        n_jobs = rng.randint(lo, hi)
        doc = generate_synthetic_build(
            n_jobs=n_jobs,
            edge_prob=edge_prob,
            n_types=n_types,
            max_counts=max_counts,
            runtime_range=runtime_range,
            rng_seed=rng_seed * 1_000_003 + i,
        )
        suite.append((f"build_{i:03d}", build_from_dict(doc)))
    return suite


def run_test_case_one(
    suite: Sequence[tuple[str, Build]],
    history: RunHistory | None,
    weights: FitnessWeights,
    config: GaConfig,
    *,
    pin_to_baseline: bool = False,
    est_config: EstimatorConfig | None = None,
    workers: int = 1,
) -> list[BenchmarkRow]:
    """GA vs. original-order baseline across a suite of builds, one row each."""
    rows = []
    for build_id, build in suite:
        baseline = baseline_evaluate(build, history, est_config=est_config)
        started = time.perf_counter()
        result = evolve(
            build,
            history,
            weights,
            config,
            est_config=est_config,
            workers=workers,
            pinned_allocation=baseline.allocation if pin_to_baseline else None,
        )
        wall = time.perf_counter() - started
        rows.append(
            BenchmarkRow.compute(
                build_id=build_id,
                baseline_makespan_s=baseline.makespan_s,
                ga_makespan_s=result.schedule.makespan_s,
                ga_machines=result.allocation.total(),
                baseline_machines=baseline.allocation.total(),
                search_wall_time_s=wall,
                seed=config.rng_seed,
            )
        )
    return rows


def run_test_case_two(
    build: Build,
    history: RunHistory | None,
    weights: FitnessWeights,
    config: GaConfig,
    n_seeds: int,
    *,
    build_id: str = "build",
    est_config: EstimatorConfig | None = None,
    workers: int = 1,
) -> tuple[list[BenchmarkRow], dict]:
    """Run-to-run stability: same build, n distinct seeds, dispersion stats."""
    from dataclasses import replace

    baseline = baseline_evaluate(build, history, est_config=est_config)
    rows = []
    for i in range(n_seeds):
        seeded = replace(config, rng_seed=config.rng_seed + i)
        started = time.perf_counter()
        result = evolve(build, history, weights, seeded, est_config=est_config, workers=workers)
        wall = time.perf_counter() - started
        rows.append(
            BenchmarkRow.compute(
                build_id=build_id,
                baseline_makespan_s=baseline.makespan_s,
                ga_makespan_s=result.schedule.makespan_s,
                ga_machines=result.allocation.total(),
                baseline_machines=baseline.allocation.total(),
                search_wall_time_s=wall,
                seed=seeded.rng_seed,
            )
        )
    makespans = [r.ga_makespan_s for r in rows]
    best = min(makespans)
    stats = {
        "min_makespan_s": best,
        "max_makespan_s": max(makespans),
        "relative_spread": (max(makespans) - best) / best if best > 0 else 0.0,
    }
    return rows, stats


def run_test_case_three(
    suite: Sequence[tuple[str, Build]],
    history: RunHistory | None,
    weights: FitnessWeights,
    config: GaConfig,
    *,
    est_config: EstimatorConfig | None = None,
    workers: int = 1,
) -> tuple[list[BenchmarkRow], dict]:
    """Search-cost-inclusive comparison: GA makespan plus search wall time."""
    rows = run_test_case_one(
        suite, history, weights, config, est_config=est_config, workers=workers
    )
    summary = {
        "caveat": SEARCH_COST_CAVEAT,
        "per_build": [
            {
                "build_id": r.build_id,
                "baseline_makespan_s": r.baseline_makespan_s,
                "ga_makespan_s": r.ga_makespan_s,
                "search_wall_time_s": r.search_wall_time_s,
                "combined_s": r.ga_makespan_s + r.search_wall_time_s,
            }
            for r in rows
        ],
    }
    return rows, summary
