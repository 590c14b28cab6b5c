"""Evolution-guided temporal planning: an exact sub-planner solves the legs
between evolved intermediate states, and the legs are compressed into one
concurrent schedule."""

from .costs import CostModel, parse_cost
from .errors import (
    CapExceeded,
    ConfigError,
    DaeError,
    GoalUnsupportable,
    GroundingExplosion,
    InitInfeasible,
    InvalidSchedule,
    MissingStationPredicates,
    NotApplicable,
    NotSequentiallyExecutable,
    ParseError,
    UnknownSymbol,
    UnsupportedFeature,
)
from .evolve import EngineParams, Evaluator, RunResult, run_engine, run_es, run_nsga2
from .grounding import GroundAction, GroundTask, WorldState, ground
from .harness import (
    ExperimentConfig,
    ParetoFront,
    brute_force_pareto,
    build_mini_zeno,
    build_zeno_travel,
    mini_zeno_cost,
    run_experiment,
)
from .invariants import InvariantSpec, parse_invariants
from .pddl import Atom, DomainModel, ProblemModel, parse_domain, parse_problem
from .planner import (
    Outcome,
    PlanResult,
    SearchLimits,
    SubProblem,
    applicable,
    apply,
    heuristic,
    solve,
)
from .schedule import (
    Occurrence,
    Schedule,
    compress,
    evaluate_cost,
    final_state,
    interferes,
    makespan,
    overlaps,
    plan_text,
    validate,
)
from .stations import (
    InitParams,
    Station,
    StationSpace,
    build_station_space,
    distance,
    dump_genome,
    goal_station,
    is_consistent,
    mutate_station,
    project,
    random_init,
    station_atoms,
)

__version__ = "0.1.0"
