"""Genetic search over priority lists and machine allocations.

Individuals carry a job permutation plus per-type machine-count bit segments.
Fitness combines two objectives, makespan and total allocated machines, each
weighted and scaled by the population maxima; lower is better.  Priority
segments recombine with order-based crossover (OX or PMX) so children stay
permutations; machine segments recombine per type so a windows segment never
mixes into a linux one.
"""

from __future__ import annotations

import random
import time
from bisect import bisect_left
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional, Sequence

from .estimate import EstimatorConfig, RunHistory, estimate_all
from .model import (
    Build,
    BuildSpecError,
    Chromosome,
    ContractViolation,
    MachineAllocation,
    decode_machine_bits,
    encode_machine_counts,
    max_allocation,
    validate_build,
)
from .sim import ScheduleResult, SimContext, is_deadlock_free, simulate

SCALINGS = ("normalized", "literal")
CROSSOVER_KINDS = ("ox", "pmx")
INIT_KINDS = ("rejection", "repair")


@dataclass(frozen=True)
class FitnessWeights:
    w_rt: float = 1.0
    w_mc: float = 0.0
    scaling: str = "normalized"

    def __post_init__(self):
        if self.w_rt < 0 or self.w_mc < 0 or self.w_rt + self.w_mc <= 0:
            raise BuildSpecError(f"weights must be non-negative and not both zero: {self}")
        if self.scaling not in SCALINGS:
            raise BuildSpecError(f"unknown scaling {self.scaling!r}, expected one of {SCALINGS}")


@dataclass(frozen=True)
class PopulationMetrics:
    """Per-individual makespan (seconds) and total machine count, plus maxima."""

    run_times: tuple[float, ...]
    machine_counts: tuple[int, ...]

    @cached_property
    def max_run_time(self) -> float:
        return max(self.run_times)

    @cached_property
    def max_machine_count(self) -> int:
        return max(self.machine_counts)


@dataclass(frozen=True)
class FitnessValue:
    alpha: float
    beta: float

    @property
    def total(self) -> float:
        return self.alpha + self.beta


def fitness_given_maxima(
    run_time: float,
    machine_count: float,
    max_run_time: float,
    max_machine_count: float,
    weights: FitnessWeights,
) -> FitnessValue:
    """Scalarize one individual against explicit population maxima.

    literal multiplies by the maxima exactly as the weighted-sum formula is
    written; normalized divides by them, producing dimensionless terms in
    [0, 1] (0 when the maximum is 0).
    """
    if weights.scaling == "literal":
        return FitnessValue(
            alpha=weights.w_rt * max_run_time * run_time,
            beta=weights.w_mc * max_machine_count * machine_count,
        )
    alpha = weights.w_rt * run_time / max_run_time if max_run_time else 0.0
    beta = weights.w_mc * machine_count / max_machine_count if max_machine_count else 0.0
    return FitnessValue(alpha=alpha, beta=beta)


def fitness(metrics: PopulationMetrics, weights: FitnessWeights) -> list[FitnessValue]:
    """Fitness of every individual in a population; lower total is better."""
    if not metrics.run_times:
        raise BuildSpecError("fitness of an empty population")
    mrt = metrics.max_run_time
    mmc = metrics.max_machine_count
    return [
        fitness_given_maxima(rt, mc, mrt, mmc, weights)
        for rt, mc in zip(metrics.run_times, metrics.machine_counts)
    ]


@dataclass(frozen=True)
class GaConfig:
    population_size: Optional[int] = None  # None: twice the job count
    max_generations: int = 200
    stagnation_limit: int = 50
    crossover_rate: float = 0.9
    permutation_mutation_rate: float = 0.1
    bit_flip_rate: Optional[float] = None  # None: one expected flip per child
    tournament_size: int = 3
    elite_count: int = 2
    crossover_kind: str = "ox"
    init_kind: str = "repair"
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("crossover_rate", "permutation_mutation_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise BuildSpecError(f"{name} outside [0, 1]: {v}")
        if self.bit_flip_rate is not None and not 0.0 <= self.bit_flip_rate <= 1.0:
            raise BuildSpecError(f"bit_flip_rate outside [0, 1]: {self.bit_flip_rate}")
        if self.tournament_size < 1:
            raise BuildSpecError("tournament_size must be >= 1")
        if self.elite_count < 0:
            raise BuildSpecError("elite_count must be >= 0")
        if self.max_generations < 1:
            raise BuildSpecError("max_generations must be >= 1")
        if self.crossover_kind not in CROSSOVER_KINDS:
            raise BuildSpecError(f"unknown crossover_kind {self.crossover_kind!r}")
        if self.init_kind not in INIT_KINDS:
            raise BuildSpecError(f"unknown init_kind {self.init_kind!r}")

    def resolved_population_size(self, build: Build) -> int:
        if self.population_size is not None:
            if self.population_size < 2:
                raise BuildSpecError("population_size must be >= 2")
            return self.population_size
        return max(2, 2 * len(build.jobs))


@dataclass(frozen=True)
class GenerationStat:
    generation: int
    best_fitness: float
    best_makespan_s: float
    best_machines: int
    elapsed_s: float


@dataclass(frozen=True)
class ParetoPoint:
    makespan_s: float
    machine_count: int
    chromosome: Chromosome


@dataclass(frozen=True)
class EvolutionResult:
    best: Chromosome
    best_fitness: FitnessValue
    allocation: MachineAllocation
    schedule: ScheduleResult
    trace: tuple[GenerationStat, ...]
    pareto_front: tuple[ParetoPoint, ...]
    generations: int
    # Maxima of the initial population; every trace fitness uses these, so
    # values are comparable across generations.
    reference_max_run_time: float
    reference_max_machine_count: int


# ---------------------------------------------------------------------------
# Priority-list repair


def repair_priority_list(priority: Sequence[str], build: Build) -> list[str]:
    """Push every job behind its dependencies, preserving order otherwise.

    Pass semantics: walk the jobs in their current list order; any job sitting
    before its furthest-right dependency is removed and reinserted directly
    after that dependency.  Passes repeat until none moves.  On an acyclic
    build the fixpoint is a topological order close to the input.
    """
    index = build.name_to_index
    order = [index[name] for name in priority]
    if len(order) != len(build.jobs) or set(order) != set(range(len(build.jobs))):
        raise ContractViolation("priority is not a permutation of the build's jobs")
    _repair_indices(order, build.dep_indices)
    names = build.job_names
    return [names[i] for i in order]


def _repair_indices(order: list[int], deps: Sequence[Sequence[int]]) -> list[int]:
    n = len(order)
    if n < 2:
        return order
    pos = [0] * len(deps)
    for p, j in enumerate(order):
        pos[j] = p
    for _ in range(n + 1):
        moved = False
        for j in list(order):
            dj = deps[j]
            if not dj:
                continue
            md = -1
            for d in dj:
                pd = pos[d]
                if pd > md:
                    md = pd
            pj = pos[j]
            if pj < md:
                order.pop(pj)
                order.insert(md, j)
                for p in range(pj, md + 1):
                    pos[order[p]] = p
                moved = True
        if not moved:
            return order
    raise ContractViolation("priority repair did not reach a fixpoint; is the build acyclic?")


# ---------------------------------------------------------------------------
# Population initialization


def _random_machine_bits(build: Build, rng: random.Random) -> tuple[str, ...]:
    counts = {t.name: rng.randint(1, t.max_count) for t in build.machine_types}
    return encode_machine_counts(MachineAllocation(counts), build.machine_types)


def init_population_rejection(build: Build, config: GaConfig, rng: random.Random) -> list[Chromosome]:
    """Shuffle-and-check initializer: reshuffle until the list drains."""
    size = config.resolved_population_size(build)
    names = list(build.job_names)
    population = []
    for _ in range(size):
        candidate = list(names)
        rng.shuffle(candidate)
        while not is_deadlock_free(candidate, build):
            rng.shuffle(candidate)
        population.append(Chromosome(tuple(candidate), _random_machine_bits(build, rng)))
    return population


def init_population_repair(build: Build, config: GaConfig, rng: random.Random) -> list[Chromosome]:
    """Shuffle-and-repair initializer; much cheaper than rejection on big builds."""
    size = config.resolved_population_size(build)
    names = list(build.job_names)
    population = []
    for _ in range(size):
        candidate = list(names)
        rng.shuffle(candidate)
        candidate = repair_priority_list(candidate, build)
        population.append(Chromosome(tuple(candidate), _random_machine_bits(build, rng)))
    return population


# ---------------------------------------------------------------------------
# Variation operators


def _draw_pivots(n: int, rng: random.Random) -> tuple[int, int]:
    i = rng.randrange(n)
    j = rng.randrange(n)
    return (i, j) if i <= j else (j, i)


def _check_pivots(pivots: tuple[int, int], n: int) -> tuple[int, int]:
    i, j = pivots
    if not 0 <= i <= j < n:
        raise BuildSpecError(f"pivots {pivots} invalid for length {n}")
    return i, j


def ordered_crossover(
    p1: Sequence,
    p2: Sequence,
    pivots: Optional[tuple[int, int]] = None,
    rng: Optional[random.Random] = None,
) -> tuple:
    """OX: keep p1's segment in place, fill the rest from p2 in scan order.

    Both the fill positions and the donor scan start right after the segment
    and wrap around; genes already present are skipped.
    """
    n = len(p1)
    i, j = _check_pivots(pivots, n) if pivots is not None else _draw_pivots(n, rng)
    child: list = [None] * n
    child[i : j + 1] = p1[i : j + 1]
    used = set(p1[i : j + 1])
    fill = (j + 1) % n
    for k in range(n):
        gene = p2[(j + 1 + k) % n]
        if gene in used:
            continue
        child[fill] = gene
        used.add(gene)
        fill = (fill + 1) % n
    return tuple(child)


def pmx_crossover(
    p1: Sequence,
    p2: Sequence,
    pivots: Optional[tuple[int, int]] = None,
    rng: Optional[random.Random] = None,
) -> tuple[tuple, tuple]:
    """PMX: swap the pivot segments and resolve outside conflicts by mapping."""
    n = len(p1)
    i, j = _check_pivots(pivots, n) if pivots is not None else _draw_pivots(n, rng)

    def one(base: Sequence, donor: Sequence) -> tuple:
        child = list(base)
        child[i : j + 1] = donor[i : j + 1]
        mapping = {donor[k]: base[k] for k in range(i, j + 1)}
        for k in list(range(0, i)) + list(range(j + 1, n)):
            gene = base[k]
            while gene in mapping:
                gene = mapping[gene]
            child[k] = gene
        return tuple(child)

    return one(p1, p2), one(p2, p1)


def machine_segment_crossover(
    bits1: Sequence[str],
    bits2: Sequence[str],
    cuts: Optional[Sequence[int]] = None,
    rng: Optional[random.Random] = None,
) -> tuple[str, ...]:
    """One-point crossover per machine-type segment, types never mixing.

    Cut c in [0, width] takes the first c bits from the first parent and the
    rest from the second; c = 0 therefore copies the second parent's segment.
    """
    if len(bits1) != len(bits2) or any(len(a) != len(b) for a, b in zip(bits1, bits2)):
        raise BuildSpecError("machine segment layouts differ between parents")
    child = []
    for idx, (a, b) in enumerate(zip(bits1, bits2)):
        c = cuts[idx] if cuts is not None else rng.randint(0, len(a))
        if not 0 <= c <= len(a):
            raise BuildSpecError(f"cut {c} invalid for segment width {len(a)}")
        child.append(a[:c] + b[c:])
    return tuple(child)


def mutate(chromosome: Chromosome, build: Build, config: GaConfig, rng: random.Random) -> Chromosome:
    """Swap mutation (followed by repair) plus independent machine-bit flips."""
    priority = chromosome.priority
    n = len(priority)
    if n >= 2 and rng.random() < config.permutation_mutation_rate:
        a = rng.randrange(n)
        b = rng.randrange(n)
        swapped = list(priority)
        swapped[a], swapped[b] = swapped[b], swapped[a]
        priority = tuple(repair_priority_list(swapped, build))

    total_bits = sum(len(seg) for seg in chromosome.machine_bits)
    rate = config.bit_flip_rate if config.bit_flip_rate is not None else (
        1.0 / total_bits if total_bits else 0.0
    )
    bits = chromosome.machine_bits
    if rate > 0.0:
        bits = tuple(
            "".join("10"[bit == "1"] if rng.random() < rate else bit for bit in seg)
            for seg in bits
        )
    return Chromosome(priority, bits)


def select_parents(
    population: Sequence[Chromosome],
    fitnesses: Sequence[FitnessValue],
    config: GaConfig,
    rng: random.Random,
) -> tuple[Chromosome, Chromosome]:
    """Two independent tournaments; lowest total wins, ties decided by the rng."""
    if not population:
        raise BuildSpecError("selection from an empty population")

    def tournament() -> Chromosome:
        k = min(config.tournament_size, len(population))
        entrants = rng.sample(range(len(population)), k)
        best = min(fitnesses[i].total for i in entrants)
        tied = [i for i in entrants if fitnesses[i].total == best]
        return population[tied[0] if len(tied) == 1 else rng.choice(tied)]

    return tournament(), tournament()


# ---------------------------------------------------------------------------
# Evolution loop


class _Evaluator:
    """Pure, memoized makespan/machine-count evaluation for one build."""

    def __init__(self, ctx: SimContext, build: Build, workers: int):
        self.ctx = ctx
        self.name_to_index = build.name_to_index
        self.machine_types = build.machine_types
        self.workers = workers
        self.cache: dict[Chromosome, tuple[float, int]] = {}

    def _evaluate(self, chromosome: Chromosome) -> tuple[float, int]:
        alloc = decode_machine_bits(chromosome, self.machine_types)
        counts = self.ctx.counts_by_type_index(alloc)
        order = [self.name_to_index[name] for name in chromosome.priority]
        makespan_ms, _ = self.ctx.run(order, counts)
        if makespan_ms is None:
            raise ContractViolation("deadlock during evolution; population invariant broken")
        return makespan_ms / 1000.0, sum(counts)

    def evaluate_all(self, population: Sequence[Chromosome]) -> list[tuple[float, int]]:
        missing = [c for c in population if c not in self.cache]
        if missing:
            if self.workers > 1:
                with ThreadPoolExecutor(max_workers=self.workers) as pool:
                    results = list(pool.map(self._evaluate, missing))
            else:
                results = [self._evaluate(c) for c in missing]
            # Reduction in list order keeps the outcome independent of workers.
            for chrom, res in zip(missing, results):
                self.cache[chrom] = res
        return [self.cache[c] for c in population]


def _update_pareto(
    front: list[tuple[float, int, Chromosome]], rt: float, mc: int, chrom: Chromosome
) -> bool:
    """Insert (rt, mc) if nondominated; returns True if the front changed."""
    for frt, fmc, _ in front:
        if frt <= rt and fmc <= mc:
            return False  # dominated or duplicate; first-seen witness kept
    front[:] = [(frt, fmc, c) for frt, fmc, c in front if not (rt <= frt and mc <= fmc)]
    front.append((rt, mc, chrom))
    return True


def evolve(
    build: Build,
    history: RunHistory | None,
    weights: FitnessWeights,
    config: GaConfig,
    *,
    est_config: EstimatorConfig | None = None,
    workers: int = 1,
    pinned_allocation: MachineAllocation | None = None,
) -> EvolutionResult:
    """Run the full genetic search and return the best individual found.

    The user's original job order, repaired to feasibility, is seeded into the
    initial population with the maximum allocation, so the search can never
    end worse than the status quo.  Selection pressure uses each generation's
    own population maxima; the returned best and the per-generation trace are
    scored against the initial population's maxima so that fitness values are
    comparable across generations (best fitness is then non-increasing).

    Setting pinned_allocation restricts the search to priority lists only.
    """
    validate_build(build).raise_if_invalid()
    if not build.jobs:
        raise BuildSpecError("cannot evolve an empty build")
    size = config.resolved_population_size(build)
    elite_count = min(config.elite_count, size - 1)
    run_times = estimate_all(build, history or RunHistory({}), est_config)

    rng = random.Random(config.rng_seed)
    init = init_population_repair if config.init_kind == "repair" else init_population_rejection
    population = init(build, config, rng)

    seed_priority = tuple(repair_priority_list(list(build.job_names), build))
    if pinned_allocation is not None:
        pinned_bits = encode_machine_counts(pinned_allocation, build.machine_types)
        population = [Chromosome(c.priority, pinned_bits) for c in population]
        population[0] = Chromosome(seed_priority, pinned_bits)
        config = replace(config, bit_flip_rate=0.0)
    else:
        baseline_bits = encode_machine_counts(max_allocation(build), build.machine_types)
        population[0] = Chromosome(seed_priority, baseline_bits)

    evaluator = _Evaluator(SimContext(build, run_times), build, workers)

    trace: list[GenerationStat] = []
    front: list[tuple[float, int, Chromosome]] = []
    ref_rt = ref_mc = None
    best_total = None
    best_entry: tuple[float, int, Chromosome] | None = None
    stagnation = 0
    generations = 0
    started = time.perf_counter()

    for generation in range(config.max_generations):
        generations = generation + 1
        evals = evaluator.evaluate_all(population)
        metrics = PopulationMetrics(
            run_times=tuple(rt for rt, _ in evals),
            machine_counts=tuple(mc for _, mc in evals),
        )
        if ref_rt is None:
            ref_rt = metrics.max_run_time
            ref_mc = metrics.max_machine_count

        changed = False
        for chrom, (rt, mc) in zip(population, evals):
            changed |= _update_pareto(front, rt, mc, chrom)
        if changed or best_entry is None:
            scored = [
                (fitness_given_maxima(rt, mc, ref_rt, ref_mc, weights).total, k)
                for k, (rt, mc, _) in enumerate(front)
            ]
            total, k = min(scored)
            if best_total is None or total < best_total:
                best_total = total
                best_entry = front[k]
                stagnation = -1
        stagnation += 1

        trace.append(
            GenerationStat(
                generation=generation,
                best_fitness=best_total,
                best_makespan_s=best_entry[0],
                best_machines=best_entry[1],
                elapsed_s=time.perf_counter() - started,
            )
        )
        if generations >= config.max_generations or stagnation >= config.stagnation_limit:
            break

        fits = fitness(metrics, weights)
        ranked = sorted(range(size), key=lambda i: (fits[i].total, i))
        nxt = [population[i] for i in ranked[:elite_count]]
        while len(nxt) < size:
            p1, p2 = select_parents(population, fits, config, rng)
            if rng.random() < config.crossover_rate:
                if config.crossover_kind == "pmx":
                    c1, c2 = pmx_crossover(p1.priority, p2.priority, rng=rng)
                else:
                    c1 = ordered_crossover(p1.priority, p2.priority, rng=rng)
                    c2 = ordered_crossover(p2.priority, p1.priority, rng=rng)
                b1 = machine_segment_crossover(p1.machine_bits, p2.machine_bits, rng=rng)
                b2 = machine_segment_crossover(p2.machine_bits, p1.machine_bits, rng=rng)
            else:
                c1, b1 = p1.priority, p1.machine_bits
                c2, b2 = p2.priority, p2.machine_bits
            nxt.append(mutate(Chromosome(c1, b1), build, config, rng))
            if len(nxt) < size:
                nxt.append(mutate(Chromosome(c2, b2), build, config, rng))
        population = nxt

    best_rt, best_mc, best_chrom = best_entry
    allocation = decode_machine_bits(best_chrom, build.machine_types)
    schedule = simulate(best_chrom.priority, allocation, build, run_times)
    assert isinstance(schedule, ScheduleResult)
    best_fit = fitness_given_maxima(best_rt, best_mc, ref_rt, ref_mc, weights)
    return EvolutionResult(
        best=best_chrom,
        best_fitness=best_fit,
        allocation=allocation,
        schedule=schedule,
        trace=tuple(trace),
        pareto_front=tuple(ParetoPoint(rt, mc, c) for rt, mc, c in front),
        generations=generations,
        reference_max_run_time=ref_rt,
        reference_max_machine_count=ref_mc,
    )
