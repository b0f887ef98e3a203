"""Genetic-algorithm scheduling for CI builds.

Given a build (jobs, dependencies, machine-type bounds), the package searches
for a job priority list and a per-type machine allocation that together
minimize a weighted combination of makespan and allocated machine count,
evaluated by an event-driven list-scheduling simulator.
"""

from .model import (
    Build,
    BuildSpecError,
    Chromosome,
    ContractViolation,
    Job,
    MachineAllocation,
    MachineType,
    ValidationReport,
    decode_machine_bits,
    encode_machine_counts,
    max_allocation,
    validate_build,
)
from .sim import (
    Assignment,
    Deadlock,
    ScheduleResult,
    SimContext,
    SimVerdict,
    is_deadlock_free,
    simulate,
)
from .estimate import EstimatorConfig, RunHistory, estimate_all, quantile
from .ga import (
    EvolutionResult,
    FitnessValue,
    FitnessWeights,
    GaConfig,
    GenerationStat,
    ParetoPoint,
    PopulationMetrics,
    evolve,
    fitness,
    fitness_given_maxima,
    init_population_rejection,
    init_population_repair,
    machine_segment_crossover,
    mutate,
    ordered_crossover,
    pmx_crossover,
    repair_priority_list,
    select_parents,
)
from .persistence import (
    BenchmarkRow,
    build_from_dict,
    build_to_dict,
    generate_synthetic_build,
    history_from_dict,
    load_build_spec,
    load_history,
    load_schedule_report,
    save_build_spec,
    save_history,
    schedule_report,
    write_reports,
)
from .bench import (
    BruteForceResult,
    baseline_evaluate,
    brute_force_optimum,
    run_test_case_one,
    run_test_case_three,
    run_test_case_two,
    synthetic_suite,
)

__version__ = "0.1.0"
