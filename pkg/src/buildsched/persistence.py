"""File formats: build specs, run histories, schedule reports, CSV outputs.

Build specs and histories are JSON documents; schedules are JSON reports that
can be reloaded and re-checked; evolution traces and benchmark results are
CSV.  Durations cross the file boundary as decimal seconds while the engine
works in integer milliseconds.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .estimate import RunHistory
from .ga import FitnessValue, FitnessWeights, GenerationStat
from .model import (
    Build,
    BuildSpecError,
    Job,
    MachineType,
    validate_build,
)
from .sim import ScheduleResult

TRACE_HEADER = ["generation", "best_fitness", "best_makespan", "best_machines", "elapsed_s"]
BENCHMARK_HEADER = [
    "build_id",
    "baseline_makespan_s",
    "ga_makespan_s",
    "ga_machines",
    "baseline_machines",
    "improvement_pct",
    "search_wall_time_s",
    "seed",
]

SYNTHETIC_TYPE_NAMES = ("windows", "suse", "linux")


@dataclass(frozen=True)
class BenchmarkRow:
    build_id: str
    baseline_makespan_s: float
    ga_makespan_s: float
    ga_machines: int
    baseline_machines: int
    improvement_pct: float
    search_wall_time_s: float
    seed: int

    @classmethod
    def compute(
        cls,
        build_id: str,
        baseline_makespan_s: float,
        ga_makespan_s: float,
        ga_machines: int,
        baseline_machines: int,
        search_wall_time_s: float,
        seed: int,
    ) -> "BenchmarkRow":
        if baseline_makespan_s > 0:
            improvement = 100.0 * (baseline_makespan_s - ga_makespan_s) / baseline_makespan_s
        else:
            improvement = 0.0
        return cls(
            build_id=build_id,
            baseline_makespan_s=baseline_makespan_s,
            ga_makespan_s=ga_makespan_s,
            ga_machines=ga_machines,
            baseline_machines=baseline_machines,
            improvement_pct=improvement,
            search_wall_time_s=search_wall_time_s,
            seed=seed,
        )


# ---------------------------------------------------------------------------
# Build specs


def _field(obj: Mapping, key: str, kind, where: str):
    if key not in obj:
        raise BuildSpecError(f"{where}: missing key {key!r}")
    value = obj[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise BuildSpecError(f"{where}.{key}: expected {kind.__name__}, got {type(value).__name__}")
    return value


def build_from_dict(doc: Mapping[str, Any]) -> Build:
    if not isinstance(doc, Mapping):
        raise BuildSpecError("build spec must be an object")
    jobs = []
    for i, entry in enumerate(doc.get("jobs", [])):
        where = f"jobs[{i}]"
        if not isinstance(entry, Mapping):
            raise BuildSpecError(f"{where}: expected an object")
        name = _field(entry, "name", str, where)
        deps = entry.get("deps", [])
        if not isinstance(deps, list) or any(not isinstance(d, str) for d in deps):
            raise BuildSpecError(f"{where}.deps: expected a list of job names")
        machine_type = _field(entry, "machine_type", str, where)
        run_time = entry.get("run_time")
        if run_time is not None and (isinstance(run_time, bool) or not isinstance(run_time, (int, float))):
            raise BuildSpecError(f"{where}.run_time: expected a number of seconds or null")
        jobs.append(
            Job(
                name=name,
                deps=tuple(deps),
                machine_type=machine_type,
                declared_run_time=float(run_time) if run_time is not None else None,
            )
        )
    types = []
    for i, entry in enumerate(doc.get("machine_types", [])):
        where = f"machine_types[{i}]"
        if not isinstance(entry, Mapping):
            raise BuildSpecError(f"{where}: expected an object")
        types.append(MachineType(name=_field(entry, "name", str, where), max_count=_field(entry, "max_count", int, where)))
    build = Build(jobs=tuple(jobs), machine_types=tuple(types))
    validate_build(build).raise_if_invalid()
    return build


def build_to_dict(build: Build) -> dict:
    return {
        "jobs": [
            {
                "name": j.name,
                "deps": list(j.deps),
                "machine_type": j.machine_type,
                "run_time": j.declared_run_time,
            }
            for j in build.jobs
        ],
        "machine_types": [{"name": t.name, "max_count": t.max_count} for t in build.machine_types],
    }


def _read_json(path: str | Path) -> Any:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise BuildSpecError(f"{path}: parse error at line {e.lineno}, column {e.colno}: {e.msg}") from e


def load_build_spec(path: str | Path) -> Build:
    """Load and validate a build spec document; order of jobs is preserved."""
    return build_from_dict(_read_json(path))


def save_build_spec(build: Build, path: str | Path) -> None:
    Path(path).write_text(json.dumps(build_to_dict(build), indent=2) + "\n")


# ---------------------------------------------------------------------------
# Run histories


def history_from_dict(doc: Mapping[str, Any]) -> RunHistory:
    if not isinstance(doc, Mapping):
        raise BuildSpecError("history must be an object of job -> samples")
    samples: dict[str, tuple[float, ...]] = {}
    for name, values in doc.items():
        if not isinstance(values, list) or any(
            isinstance(v, bool) or not isinstance(v, (int, float)) for v in values
        ):
            raise BuildSpecError(f"history[{name}]: expected a list of numbers")
        for v in values:
            if v <= 0:
                raise BuildSpecError(f"history[{name}]: non-positive sample {v}")
        samples[name] = tuple(float(v) for v in values)
    return RunHistory(samples)


def load_history(path: str | Path) -> RunHistory:
    return history_from_dict(_read_json(path))


def save_history(history: RunHistory, path: str | Path) -> None:
    doc = {name: list(values) for name, values in history.samples.items()}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


# ---------------------------------------------------------------------------
# Reports


def schedule_report(
    schedule: ScheduleResult,
    fitness: FitnessValue,
    weights: FitnessWeights,
    seed: int,
) -> dict:
    """The reloadable JSON document describing one simulated schedule."""
    return {
        "assignments": [
            {
                "job": a.job,
                "machine_type": a.machine_type,
                "machine_index": a.machine_index,
                "start_s": a.start_ms / 1000.0,
                "end_s": a.end_ms / 1000.0,
            }
            for a in schedule.assignments
        ],
        "makespan_s": schedule.makespan_ms / 1000.0,
        "allocation": dict(schedule.allocation.counts),
        "fitness": {"alpha": fitness.alpha, "beta": fitness.beta, "total": fitness.total},
        "config": {
            "seed": seed,
            "w_rt": weights.w_rt,
            "w_mc": weights.w_mc,
            "scaling": weights.scaling,
        },
    }


def load_schedule_report(path: str | Path) -> dict:
    return _read_json(path)


def write_reports(
    report: Mapping | None,
    trace: Sequence[GenerationStat] | None,
    rows: Iterable[BenchmarkRow] | None,
    out_dir: str | Path,
) -> list[Path]:
    """Write whichever artifacts are given; identical data rewrites identically."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if report is not None:
        path = out / "schedule_report.json"
        path.write_text(json.dumps(report, indent=2) + "\n")
        written.append(path)
    if trace is not None:
        path = out / "trace.csv"
        with path.open("w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(TRACE_HEADER)
            for s in trace:
                writer.writerow(
                    [s.generation, s.best_fitness, s.best_makespan_s, s.best_machines, s.elapsed_s]
                )
        written.append(path)
    if rows is not None:
        path = out / "benchmark.csv"
        with path.open("w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(BENCHMARK_HEADER)
            for r in rows:
                writer.writerow(
                    [
                        r.build_id,
                        r.baseline_makespan_s,
                        r.ga_makespan_s,
                        r.ga_machines,
                        r.baseline_machines,
                        r.improvement_pct,
                        r.search_wall_time_s,
                        r.seed,
                    ]
                )
        written.append(path)
    return written


def load_benchmark_rows(path: str | Path) -> list[BenchmarkRow]:
    with Path(path).open(newline="") as f:
        reader = csv.DictReader(f)
        return [
            BenchmarkRow(
                build_id=r["build_id"],
                baseline_makespan_s=float(r["baseline_makespan_s"]),
                ga_makespan_s=float(r["ga_makespan_s"]),
                ga_machines=int(r["ga_machines"]),
                baseline_machines=int(r["baseline_machines"]),
                improvement_pct=float(r["improvement_pct"]),
                search_wall_time_s=float(r["search_wall_time_s"]),
                seed=int(r["seed"]),
            )
            for r in reader
        ]


# ---------------------------------------------------------------------------
# Synthetic builds


def generate_synthetic_build(
    n_jobs: int,
    edge_prob: float,
    n_types: int,
    max_counts: int | Sequence[int],
    runtime_range: tuple[float, float] = (10.0, 300.0),
    rng_seed: int = 0,
) -> dict:
    """A random acyclic build document, fully determined by rng_seed.

    Edges point from earlier to later jobs of a hidden random order, so the
    graph is acyclic by construction; the emitted job list is in name order,
    which generally is not a topological order.
    """
    if n_jobs < 1:
        raise BuildSpecError("n_jobs must be >= 1")
    if not 0.0 <= edge_prob <= 1.0:
        raise BuildSpecError(f"edge_prob outside [0, 1]: {edge_prob}")
    if n_types < 1:
        raise BuildSpecError("n_types must be >= 1")
    if isinstance(max_counts, int):
        max_counts = [max_counts] * n_types
    if len(max_counts) != n_types or any(m < 1 for m in max_counts):
        raise BuildSpecError("max_counts must give a positive bound per type")

    rng = random.Random(rng_seed)
    width = max(3, len(str(n_jobs - 1)))
    names = [f"J{i:0{width}d}" for i in range(n_jobs)]
    type_names = [
        SYNTHETIC_TYPE_NAMES[i] if i < len(SYNTHETIC_TYPE_NAMES) else f"os{i}" for i in range(n_types)
    ]

    topo = list(range(n_jobs))
    rng.shuffle(topo)
    rank = {job: r for r, job in enumerate(topo)}
    deps: list[list[str]] = [[] for _ in range(n_jobs)]
    for a in range(n_jobs):
        for b in range(a + 1, n_jobs):
            if rng.random() < edge_prob:
                lo, hi = (a, b) if rank[a] < rank[b] else (b, a)
                deps[hi].append(names[lo])

    lo_s, hi_s = runtime_range
    jobs = [
        {
            "name": names[i],
            "deps": sorted(deps[i]),
            "machine_type": type_names[rng.randrange(n_types)],
            "run_time": round(rng.uniform(lo_s, hi_s), 3),
        }
        for i in range(n_jobs)
    ]
    return {
        "jobs": jobs,
        "machine_types": [
            {"name": t, "max_count": int(m)} for t, m in zip(type_names, max_counts)
        ],
    }
