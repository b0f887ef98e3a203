"""Event-driven list scheduling of a priority list on typed machine pools.

The scheduler repeats two phases until the pending list drains: traverse the
pending list from beginning to end, assigning every job whose dependencies
have all completed and whose machine type still has a free machine (lowest
free index first); then jump to the earliest completion among running jobs,
finish everything ending at that instant, and free those machines.  If a full
traversal assigns nothing while nothing is running, the remaining jobs can
never start and the verdict is a deadlock.

Time is integer milliseconds internally so repeated event stepping is exact;
the public surface speaks float seconds.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from heapq import heappop, heappush
from typing import Mapping, Sequence, Union

from .model import Build, ContractViolation, MachineAllocation


@dataclass(frozen=True)
class Assignment:
    job: str
    machine_type: str
    machine_index: int
    start_ms: int
    end_ms: int

    @property
    def start_s(self) -> float:
        return self.start_ms / 1000.0

    @property
    def end_s(self) -> float:
        return self.end_ms / 1000.0


@dataclass(frozen=True)
class ScheduleResult:
    assignments: tuple[Assignment, ...]
    makespan_ms: int
    allocation: MachineAllocation

    @property
    def makespan_s(self) -> float:
        return self.makespan_ms / 1000.0

    @cached_property
    def by_job(self) -> Mapping[str, Assignment]:
        return {a.job: a for a in self.assignments}


@dataclass(frozen=True)
class Deadlock:
    unscheduled: tuple[str, ...]


SimVerdict = Union[ScheduleResult, Deadlock]


def to_ms(seconds: float) -> int:
    return round(seconds * 1000)


class SimContext:
    """Reusable per-(build, run_times) state for many simulations.

    The genetic loop simulates thousands of priority lists against one build;
    translating names to indices and seconds to milliseconds once pays off.
    """

    def __init__(self, build: Build, run_times: Mapping[str, float]):
        self.build = build
        self.durations_ms: list[int] = []
        for job in build.jobs:
            if job.name not in run_times:
                raise ContractViolation(f"no run time for job: {job.name}")
            ms = to_ms(run_times[job.name])
            if ms <= 0:
                raise ContractViolation(
                    f"job {job.name}: run time must be positive, got {run_times[job.name]!r} s"
                )
            self.durations_ms.append(ms)
        self.type_of = build.job_type_indices
        self.dependents = build.dependent_indices
        self.dep_counts = [len(d) for d in build.dep_indices]

    def counts_by_type_index(self, alloc: MachineAllocation) -> list[int]:
        counts = []
        for t in self.build.machine_types:
            c = alloc.counts.get(t.name)
            if c is None:
                raise ContractViolation(f"allocation missing machine type: {t.name}")
            if not 1 <= c <= t.max_count:
                raise ContractViolation(
                    f"allocation for {t.name} out of range [1, {t.max_count}]: {c}"
                )
            counts.append(c)
        return counts

    def run(self, priority: Sequence[int], counts: Sequence[int], record: bool = False):
        """Schedule job indices `priority` on `counts[t]` machines per type.

        Returns (makespan_ms, assignments or None); assignments is a list of
        (job_index, machine_index, start_ms, end_ms) when record is True.
        Returns (None, pending_indices) on deadlock.
        """
        durations = self.durations_ms
        type_of = self.type_of
        dependents = self.dependents
        dep_remaining = list(self.dep_counts)
        free: list[list[int]] = [list(range(c)) for c in counts]
        running: list[tuple[int, int, int, int]] = []  # (end_ms, job, type, machine)
        assignments: list[tuple[int, int, int, int]] | None = [] if record else None

        pending = list(priority)
        now = 0
        makespan = 0
        while pending:
            assigned_any = False
            still_pending = []
            for j in pending:
                if dep_remaining[j] == 0:
                    t = type_of[j]
                    pool = free[t]
                    if pool:
                        m = heappop(pool)
                        end = now + durations[j]
                        heappush(running, (end, j, t, m))
                        if end > makespan:
                            makespan = end
                        if assignments is not None:
                            assignments.append((j, m, now, end))
                        assigned_any = True
                        continue
                still_pending.append(j)
            pending = still_pending
            if not pending:
                break
            if not running:
                if not assigned_any:
                    return None, pending
                raise AssertionError("assignment recorded but nothing running")
            now = running[0][0]
            while running and running[0][0] == now:
                _, j, t, m = heappop(running)
                heappush(free[t], m)
                for k in dependents[j]:
                    dep_remaining[k] -= 1
        return makespan, assignments


def simulate(
    priority: Sequence[str],
    alloc: MachineAllocation,
    build: Build,
    run_times: Mapping[str, float],
) -> SimVerdict:
    """Simulate one priority list; returns a ScheduleResult or a Deadlock verdict.

    Preconditions: priority is a permutation of the build's job names, every
    job has a positive run time, and alloc covers every machine type.
    """
    index = build.name_to_index
    if len(priority) != len(build.jobs) or set(priority) != set(build.job_names):
        raise ContractViolation("priority is not a permutation of the build's jobs")
    ctx = SimContext(build, run_times)
    counts = ctx.counts_by_type_index(alloc)
    order = [index[name] for name in priority]
    makespan, detail = ctx.run(order, counts, record=True)
    if makespan is None:
        return Deadlock(tuple(build.jobs[j].name for j in detail))
    out = tuple(
        Assignment(
            job=build.jobs[j].name,
            machine_type=build.machine_types[ctx.type_of[j]].name,
            machine_index=m,
            start_ms=start,
            end_ms=end,
        )
        for j, m, start, end in detail
    )
    return ScheduleResult(assignments=out, makespan_ms=makespan, allocation=alloc)


def is_deadlock_free(priority: Sequence[str], build: Build) -> bool:
    """True iff the list drains under unit run times and one machine per type."""
    unit = {name: 1.0 for name in build.job_names}
    single = MachineAllocation({t.name: 1 for t in build.machine_types})
    return isinstance(simulate(priority, single, build, unit), ScheduleResult)
