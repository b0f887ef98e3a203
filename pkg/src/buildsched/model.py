"""Domain model: builds, jobs, machine types, chromosomes, structural validation.

A build is the problem instance: a list of jobs with dependencies, each job
pinned to one machine type, and per-type upper bounds on how many machines may
be allocated.  A chromosome is one candidate solution: a priority permutation
over the job names plus one fixed-width bit segment per machine type encoding
the allocated machine count.

All types here are immutable values; they can be shared freely between
parallel workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from heapq import heapify, heappop, heappush
from typing import Mapping, Optional, Sequence


class BuildSpecError(ValueError):
    """Malformed or structurally invalid input (bad document, bad build)."""


class ContractViolation(RuntimeError):
    """A caller broke an operation's precondition (e.g. missing run time)."""


@dataclass(frozen=True)
class Job:
    name: str
    deps: tuple[str, ...] = ()
    machine_type: str = ""
    declared_run_time: Optional[float] = None  # seconds; overrides estimation

    def __post_init__(self):
        object.__setattr__(self, "deps", tuple(self.deps))


@dataclass(frozen=True)
class MachineType:
    name: str
    max_count: int

    @property
    def bit_width(self) -> int:
        """Minimum bits that can represent max_count (ceil(log2(max_count+1)))."""
        return max(1, int(self.max_count).bit_length())


@dataclass(frozen=True)
class Build:
    """Jobs in their original (user-provided) priority order, plus machine types."""

    jobs: tuple[Job, ...]
    machine_types: tuple[MachineType, ...]

    def __post_init__(self):
        object.__setattr__(self, "jobs", tuple(self.jobs))
        object.__setattr__(self, "machine_types", tuple(self.machine_types))

    @cached_property
    def job_names(self) -> tuple[str, ...]:
        return tuple(j.name for j in self.jobs)

    @cached_property
    def jobs_by_name(self) -> Mapping[str, Job]:
        return {j.name: j for j in self.jobs}

    @cached_property
    def types_by_name(self) -> Mapping[str, MachineType]:
        return {t.name: t for t in self.machine_types}

    @cached_property
    def segment_widths(self) -> tuple[int, ...]:
        return tuple(t.bit_width for t in self.machine_types)

    # Index-based views used by the hot simulation/repair paths.

    @cached_property
    def name_to_index(self) -> Mapping[str, int]:
        return {j.name: i for i, j in enumerate(self.jobs)}

    @cached_property
    def dep_indices(self) -> tuple[tuple[int, ...], ...]:
        idx = self.name_to_index
        return tuple(tuple(idx[d] for d in j.deps) for j in self.jobs)

    @cached_property
    def dependent_indices(self) -> tuple[tuple[int, ...], ...]:
        """Inverse of dep_indices: for each job, who depends on it."""
        out: list[list[int]] = [[] for _ in self.jobs]
        for i, deps in enumerate(self.dep_indices):
            for d in deps:
                out[d].append(i)
        return tuple(tuple(x) for x in out)

    @cached_property
    def job_type_indices(self) -> tuple[int, ...]:
        tidx = {t.name: i for i, t in enumerate(self.machine_types)}
        return tuple(tidx[j.machine_type] for j in self.jobs)

    @cached_property
    def dependency_order(self) -> tuple[int, ...]:
        """Job indices in a dependency-respecting order, stable by input position.

        Jobs on or behind a dependency cycle are omitted, so a shorter result
        than the job count means the build is cyclic.
        """
        remaining = [len(d) for d in self.dep_indices]
        ready = [i for i in range(len(self.jobs)) if remaining[i] == 0]
        heapify(ready)
        out = []
        while ready:
            i = heappop(ready)
            out.append(i)
            for k in self.dependent_indices[i]:
                remaining[k] -= 1
                if remaining[k] == 0:
                    heappush(ready, k)
        return tuple(out)


@dataclass(frozen=True)
class Chromosome:
    """Priority permutation (part 1) + per-type machine-count bit segments (part 2).

    machine_bits is aligned with the build's machine_types order.
    """

    priority: tuple[str, ...]
    machine_bits: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "priority", tuple(self.priority))
        object.__setattr__(self, "machine_bits", tuple(self.machine_bits))


@dataclass(frozen=True)
class MachineAllocation:
    counts: Mapping[str, int]

    def total(self) -> int:
        return sum(self.counts.values())


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors

    def raise_if_invalid(self) -> None:
        if self.errors:
            raise BuildSpecError("invalid build:\n" + "\n".join(self.errors))


def validate_build(build: Build) -> ValidationReport:
    """Check every structural invariant of a build.

    Errors are returned, never raised: duplicate/empty names, duplicate or
    self dependencies, unresolved job/machine-type references, non-positive
    machine bounds, and dependency cycles (naming the jobs on one cycle).
    """
    errors: list[str] = []

    seen_types: set[str] = set()
    for t in build.machine_types:
        if not t.name:
            errors.append("machine type with empty name")
        if t.name in seen_types:
            errors.append(f"duplicate machine type name: {t.name}")
        seen_types.add(t.name)
        if t.max_count < 1:
            errors.append(f"machine type {t.name}: max_count must be >= 1, got {t.max_count}")

    all_names = {j.name for j in build.jobs}
    seen_jobs: set[str] = set()
    for j in build.jobs:
        if not j.name:
            errors.append("job with empty name")
        if j.name in seen_jobs:
            errors.append(f"duplicate job name: {j.name}")
        seen_jobs.add(j.name)
        if j.machine_type not in seen_types:
            errors.append(f"job {j.name}: unknown machine type: {j.machine_type}")
        dep_seen: set[str] = set()
        for d in j.deps:
            if d == j.name:
                errors.append(f"job {j.name}: depends on itself")
            if d in dep_seen:
                errors.append(f"job {j.name}: duplicate dependency: {d}")
            dep_seen.add(d)
            if d not in all_names:
                errors.append(f"job {j.name}: unresolved dependency: {d}")
        if j.declared_run_time is not None and j.declared_run_time <= 0:
            errors.append(f"job {j.name}: declared_run_time must be positive")

    # Cycle check (Kahn peel) only makes sense once references resolve.
    if not errors:
        cycle = _find_cycle(build)
        if cycle:
            errors.append("dependency cycle: " + " -> ".join(cycle))

    return ValidationReport(tuple(errors))


def _find_cycle(build: Build) -> list[str]:
    """Return one dependency cycle as [a, b, ..., a], or [] if acyclic."""
    n = len(build.jobs)
    settled = build.dependency_order
    if len(settled) == n:
        return []
    # Every leftover job still waits on a leftover dependency; walking dep
    # pointers inside the leftover set must revisit a node.
    leftover = set(range(n)) - set(settled)
    start = min(leftover)
    path, seen = [], {}
    node = start
    while node not in seen:
        seen[node] = len(path)
        path.append(node)
        node = next(d for d in build.dep_indices[node] if d in leftover)
    cycle = path[seen[node]:] + [node]
    return [build.jobs[i].name for i in cycle]


def decode_machine_bits(chromosome: Chromosome, machine_types: Sequence[MachineType]) -> MachineAllocation:
    """Decode bit segments to counts: unsigned binary, clamped into [1, max_count]."""
    if len(chromosome.machine_bits) != len(machine_types):
        raise BuildSpecError(
            f"expected {len(machine_types)} machine segments, got {len(chromosome.machine_bits)}"
        )
    counts: dict[str, int] = {}
    for seg, t in zip(chromosome.machine_bits, machine_types):
        if len(seg) != t.bit_width:
            raise BuildSpecError(
                f"machine type {t.name}: segment width {len(seg)} != expected {t.bit_width}"
            )
        raw = int(seg, 2)
        counts[t.name] = min(max(raw, 1), t.max_count)
    return MachineAllocation(counts)


def encode_machine_counts(alloc: MachineAllocation, machine_types: Sequence[MachineType]) -> tuple[str, ...]:
    """Inverse of decode_machine_bits for in-range allocations."""
    segments = []
    for t in machine_types:
        count = alloc.counts.get(t.name)
        if count is None:
            raise BuildSpecError(f"allocation missing machine type: {t.name}")
        if not 1 <= count <= t.max_count:
            raise BuildSpecError(
                f"machine type {t.name}: count {count} outside [1, {t.max_count}]"
            )
        segments.append(format(count, f"0{t.bit_width}b"))
    return tuple(segments)


def max_allocation(build: Build) -> MachineAllocation:
    """The 'as many machines as possible' allocation: max_count for every type."""
    return MachineAllocation({t.name: t.max_count for t in build.machine_types})
