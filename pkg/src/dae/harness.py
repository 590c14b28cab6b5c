"""Experiment drivers: bundled calibration tasks, an exhaustive small-depth
Pareto oracle, and the multi-run experiment harness with its on-disk layout.

Run directories are written as run_01/, run_02/, ... each holding
gen_stats.csv, front.csv, and best_plan.txt; a top-level summary.json
aggregates the runs. Every value is serialized deterministically
(fractions as "n" or "n/d", JSON with sorted keys); the only
non-reproducible field is wall_time_s.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .costs import CostModel, parse_cost
from .errors import CapExceeded, ConfigError
from .evolve import EngineParams, RunResult, run_engine
from .grounding import GroundTask, ground
from .invariants import InvariantSpec, parse_invariants
from .pddl import DomainModel, ProblemModel, parse_domain, parse_problem
from .planner import SearchLimits
from .schedule import ScheduleBuilder, evaluate_cost, interferes, plan_text
from .stations import InitParams, build_station_space


def bundled_text(name: str) -> str:
    return resources.files("dae.data").joinpath(name).read_text(encoding="utf-8")


def build_bundled_models() -> tuple[DomainModel, ProblemModel]:
    dom = parse_domain(bundled_text("mini_zeno_domain.pddl"))
    prob = parse_problem(bundled_text("mini_zeno_problem.pddl"), dom)
    return dom, prob


def build_mini_zeno() -> tuple[GroundTask, InvariantSpec]:
    """The bundled two-plane, three-passenger calibration task."""
    dom, prob = build_bundled_models()
    task = ground(dom, prob)
    inv = parse_invariants(bundled_text("mini_zeno.inv"), dom)
    return task, inv


def mini_zeno_cost(mode: str = "additive") -> CostModel:
    if mode not in ("additive", "max"):
        raise ConfigError(f"unknown cost mode '{mode}'")
    return parse_cost(bundled_text(f"mini_zeno_cost_{mode}.txt"))


def build_zeno_travel() -> tuple[GroundTask, InvariantSpec]:
    """The larger fuel-and-zoom travel task used for round-trip checks."""
    dom = parse_domain(bundled_text("zeno_travel_domain.pddl"))
    prob = parse_problem(bundled_text("zeno_travel_problem.pddl"), dom)
    task = ground(dom, prob)
    inv = parse_invariants("station-predicate at\nexclusive at 1\n", dom)
    return task, inv


def fraction_str(x) -> str:
    f = Fraction(x)
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


class ParetoFront:
    """A mutually non-dominated set of (makespan, cost) points.

    add() rejects weakly dominated candidates (duplicates included) and
    evicts points the newcomer dominates; each surviving point remembers
    one plan that realizes it.
    """

    def __init__(self):
        self._points: dict[tuple[int, Fraction], str] = {}

    def __len__(self) -> int:
        return len(self._points)

    def __contains__(self, point) -> bool:
        mk, cost = point
        return (mk, Fraction(cost)) in self._points

    def dominated(self, makespan: int, cost: Fraction) -> bool:
        return any(m <= makespan and c <= cost for m, c in self._points)

    def add(self, makespan: int, cost: Fraction, provenance: str = "") -> bool:
        cost = Fraction(cost)
        if self.dominated(makespan, cost):
            return False
        for m, c in [p for p in self._points if makespan <= p[0] and cost <= p[1]]:
            del self._points[(m, c)]
        self._points[(makespan, cost)] = provenance
        return True

    def points(self) -> list[tuple[int, Fraction]]:
        return sorted(self._points)

    def provenance(self, point) -> str:
        mk, cost = point
        return self._points[(mk, Fraction(cost))]


def brute_force_pareto(
    task: GroundTask,
    cost_model: CostModel,
    max_depth: int = 8,
    node_cap: int = 5_000_000,
) -> ParetoFront:
    """Exact (makespan, cost) front over all sequentially executable action
    sequences up to max_depth, each compressed greedily.

    Sound prunings only: goal prefixes are recorded and not extended
    (extensions cannot beat them), prefixes weakly dominated by the front
    under an unscaled running cost bound are cut, and adjacent independent
    actions are explored in one canonical order. Raises CapExceeded beyond
    node_cap pushes.
    """
    front = ParetoFront()
    builder = ScheduleBuilder(task, task.init)
    goal = task.goal
    actions = task.actions
    additive = cost_model.mode == "additive"

    # unscaled worth of each action's movement events: a lower bound on
    # what placing the action adds (occupancy scaling only increases it)
    from .schedule import _movements

    worth = []
    for a in actions:
        events = [cost_model.value(o) + cost_model.value(d) for _, o, d in _movements(task, a)]
        worth.append(sum(events, Fraction(0)) if additive else max(events, default=Fraction(0)))

    nodes = 0

    def dfs(depth: int, lb: Fraction, last) -> None:
        nonlocal nodes
        strips = builder.strips
        if goal <= strips:
            sched = builder.snapshot()
            cost = evaluate_cost(sched, task.init, cost_model)
            front.add(builder.makespan, cost, plan_text(sched))
            return
        if depth == max_depth:
            return
        if front.dominated(builder.makespan, lb):
            return
        for a in actions:
            if not a.pre <= strips:
                continue
            if last is not None:
                b, before_b = last
                if (
                    b.id > a.id
                    and not interferes(a, b)
                    and not (a.add & b.pre)
                    and not (b.add & a.pre)
                    and a.pre <= before_b
                ):
                    continue  # the swapped order is explored instead
            nodes += 1
            if nodes > node_cap:
                raise CapExceeded(f"exhaustive front search exceeded {node_cap} nodes")
            builder.push(a)
            nlb = lb + worth[a.id] if additive else max(lb, worth[a.id])
            dfs(depth + 1, nlb, (a, strips))
            builder.pop()

    dfs(0, Fraction(0), None)
    return front


@dataclass(frozen=True)
class ExperimentConfig:
    out_dir: str
    engine: str = "es"
    runs: int = 1
    seed: int = 1
    mu: int = 10
    lambda_: int = 70
    pop: int = 100
    gens: int = 30
    max_backtracks: int = 2_000  # experiment default; the planner's own default stays 10000
    max_sequence_length: int = 14
    domain_path: str | None = None
    problem_path: str | None = None
    invariants_path: str | None = None
    cost_path: str | None = None
    cost_mode: str | None = None  # bundled cost table to use when cost_path is unset
    parallel: int = 1
    n_range: tuple[int, int] = (2, 10)
    d_max: int = 3
    extra_moves: int = 3
    p_mask: float = 0.1

    def __post_init__(self):
        if not self.out_dir:
            raise ConfigError("out_dir must be set")
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        if self.parallel < 1:
            raise ConfigError("parallel must be at least 1")
        if self.engine not in ("es", "nsga2"):
            raise ConfigError(f"unknown engine '{self.engine}'")
        if self.domain_path is not None and self.problem_path is None:
            raise ConfigError("a custom domain needs a problem file")
        if self.domain_path is not None and self.invariants_path is None:
            raise ConfigError("a custom domain needs an invariants file")
        if self.cost_mode is not None and self.cost_mode not in ("additive", "max"):
            raise ConfigError(f"unknown cost mode '{self.cost_mode}'")


def load_experiment_models(cfg: ExperimentConfig) -> tuple[GroundTask, InvariantSpec, CostModel | None]:
    if cfg.domain_path is None:
        task, inv = build_mini_zeno()
        if cfg.cost_path is not None:
            cost = parse_cost(Path(cfg.cost_path).read_text(encoding="utf-8"), known_objects={o for o, _ in task.objects})
        elif cfg.cost_mode is not None or cfg.engine == "nsga2":
            cost = mini_zeno_cost(cfg.cost_mode or "additive")
        else:
            cost = None
    else:
        dom = parse_domain(Path(cfg.domain_path).read_text(encoding="utf-8"))
        prob = parse_problem(Path(cfg.problem_path).read_text(encoding="utf-8"), dom)
        task = ground(dom, prob)
        inv = parse_invariants(Path(cfg.invariants_path).read_text(encoding="utf-8"), dom)
        if cfg.cost_path is not None:
            cost = parse_cost(Path(cfg.cost_path).read_text(encoding="utf-8"), known_objects={o for o, _ in task.objects})
        elif cfg.engine == "nsga2":
            raise ConfigError("the multi-objective engine needs a cost file")
        else:
            cost = None
    return task, inv, cost


def _engine_params(cfg: ExperimentConfig, run_seed: int) -> EngineParams:
    return EngineParams(
        engine=cfg.engine,
        mu=cfg.mu,
        lambda_=cfg.lambda_,
        pop=cfg.pop,
        gens=cfg.gens,
        seed=run_seed,
        init=InitParams(
            n_range=tuple(cfg.n_range),
            d_max=cfg.d_max,
            extra_moves=cfg.extra_moves,
            p_mask=cfg.p_mask,
        ),
        limits=SearchLimits(
            max_backtracks=cfg.max_backtracks,
            max_sequence_length=cfg.max_sequence_length,
        ),
    )


def _write_run_dir(run_dir: Path, result: RunResult) -> None:
    run_dir.mkdir(parents=True, exist_ok=True)
    lines = ["generation,best_fitness,feasible,mean_genome_length,planner_calls,backtracks"]
    for row in result.rows:
        lines.append(
            f"{row.generation},{fraction_str(row.best_fitness)},{row.feasible},"
            f"{fraction_str(row.mean_length)},{row.planner_calls},{row.backtracks}"
        )
    (run_dir / "gen_stats.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    gens = result.rows[-1].generation if result.rows else 0
    run_no = run_dir.name.split("_")[-1].lstrip("0") or "0"
    lines = ["makespan,cost,run,generation"]
    for mk, cost in result.front:
        lines.append(f"{mk},{fraction_str(cost)},{run_no},{gens}")
    (run_dir / "front.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    best = result.best
    if best.ev.feasible:
        (run_dir / "best_plan.txt").write_text(plan_text(best.ev.schedule), encoding="utf-8")
    else:
        (run_dir / "best_plan.txt").write_text("; no feasible plan found\n", encoding="utf-8")


def _run_one(cfg: ExperimentConfig, index: int, prepared=None, solve_cache: dict | None = None) -> dict:
    if prepared is None:
        task, inv, cost = load_experiment_models(cfg)
        space = build_station_space(task, inv)
    else:
        task, space, cost = prepared
    run_seed = cfg.seed + index - 1
    params = _engine_params(cfg, run_seed)
    result = run_engine(task, space, params, cost, solve_cache)
    run_dir = Path(cfg.out_dir) / f"run_{index:02d}"
    _write_run_dir(run_dir, result)
    best = result.best
    return {
        "run": index,
        "seed": run_seed,
        "best": {
            "fitness": fraction_str(best.ev.fitness),
            "makespan": best.ev.total_makespan,
            "cost": fraction_str(best.ev.total_cost) if best.ev.total_cost is not None else None,
            "genome_length": len(best.genome),
            "feasible": best.ev.feasible,
        },
        "front": [[mk, fraction_str(c)] for mk, c in result.front],
        "planner_calls": result.planner_calls,
        "backtracks": result.backtracks,
    }


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Execute cfg.runs independent runs (run i uses seed cfg.seed + i - 1),
    write their directories and the aggregate summary.json, and return the
    summary as a dict."""
    t0 = time.perf_counter()
    task, inv, cost = load_experiment_models(cfg)  # validates inputs up front
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    indices = list(range(1, cfg.runs + 1))
    if cfg.parallel > 1 and cfg.runs > 1:
        with ProcessPoolExecutor(max_workers=cfg.parallel) as pool:
            run_summaries = list(pool.map(_run_one, [cfg] * len(indices), indices))
    else:
        # sequential runs share one leg cache: identical results, fewer searches
        prepared = (task, build_station_space(task, inv), cost)
        solve_cache: dict = {}
        run_summaries = [_run_one(cfg, i, prepared, solve_cache) for i in indices]
    summary = {
        "config": {
            "engine": cfg.engine,
            "runs": cfg.runs,
            "seed": cfg.seed,
            "mu": cfg.mu,
            "lambda": cfg.lambda_,
            "pop": cfg.pop,
            "gens": cfg.gens,
            "max_backtracks": cfg.max_backtracks,
            "max_sequence_length": cfg.max_sequence_length,
            "domain": cfg.domain_path or "bundled mini zeno",
            "problem": cfg.problem_path or "bundled mini zeno",
            "invariants": cfg.invariants_path or "bundled",
            "cost": cfg.cost_path or cfg.cost_mode,
            "d_max": cfg.d_max,
            "n_range": list(cfg.n_range),
            "extra_moves": cfg.extra_moves,
            "p_mask": cfg.p_mask,
        },
        "runs": run_summaries,
        "wall_time_s": round(time.perf_counter() - t0, 3),
    }
    (out / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return summary
