"""Run-time estimates: declared value, quantile of history, or seeded draw.

Jobs that ran before get a quantile of their historical samples (the upper
quartile by default, a deliberately pessimistic pick).  Jobs never seen
before get a uniform draw from a configurable range, seeded per job name so
adding or removing one job never perturbs the estimates of the others.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Mapping

from .model import Build, BuildSpecError


@dataclass(frozen=True)
class RunHistory:
    """Historical run-time samples (seconds) per job name."""

    samples: Mapping[str, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for name, values in self.samples.items():
            values = tuple(float(v) for v in values)
            for v in values:
                if v <= 0:
                    raise BuildSpecError(f"history for {name}: non-positive sample {v}")
            clean[name] = values
        object.__setattr__(self, "samples", clean)


@dataclass(frozen=True)
class EstimatorConfig:
    quantile_q: float = 0.75
    unknown_range: tuple[float, float] = (60.0, 600.0)
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.quantile_q <= 1.0:
            raise BuildSpecError(f"quantile_q outside [0, 1]: {self.quantile_q}")
        lo, hi = self.unknown_range
        if not 0 < lo <= hi:
            raise BuildSpecError(f"unknown_range must satisfy 0 < lo <= hi: {self.unknown_range}")


def quantile(samples: list[float] | tuple[float, ...], q: float) -> float:
    """Linear-interpolation quantile of the sorted samples."""
    if not samples:
        raise BuildSpecError("quantile of empty samples")
    if not 0.0 <= q <= 1.0:
        raise BuildSpecError(f"q outside [0, 1]: {q}")
    ordered = sorted(samples)
    h = q * (len(ordered) - 1)
    lo = math.floor(h)
    hi = math.ceil(h)
    if lo == hi:
        return float(ordered[lo])
    return ordered[lo] + (h - lo) * (ordered[hi] - ordered[lo])


def estimate_all(build: Build, history: RunHistory, config: EstimatorConfig | None = None) -> dict[str, float]:
    """One positive run time (seconds) for every job in the build.

    Precedence: declared run time on the job, else history quantile, else a
    uniform draw from config.unknown_range seeded by (rng_seed, job name).
    """
    config = config or EstimatorConfig()
    out: dict[str, float] = {}
    for job in build.jobs:
        if job.declared_run_time is not None:
            out[job.name] = float(job.declared_run_time)
        elif history.samples.get(job.name):
            out[job.name] = quantile(history.samples[job.name], config.quantile_q)
        else:
            rng = random.Random(f"{config.rng_seed}:{job.name}")
            lo, hi = config.unknown_range
            out[job.name] = rng.uniform(lo, hi)
    return out
