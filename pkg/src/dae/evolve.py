"""Evolution over station sequences.

A genome is a tuple of stations. Decoding solves each consecutive leg
exactly, concatenates the leg plans, and compresses the whole sequence
into one schedule. Two engines share the variation operators: a
comma-selection evolution strategy on a single makespan-based fitness,
and a rank/crowding multi-objective engine on (makespan, cost).

Every stochastic decision of a child is driven by its own generation- and
index-derived RNG, so runs are reproducible bit for bit regardless of
evaluation caching.
"""

from __future__ import annotations

import hashlib
import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .costs import CostModel
from .errors import ConfigError
from .grounding import GroundTask, WorldState
from .planner import Outcome, PlanResult, SearchLimits, SubProblem, apply, solve
from .schedule import Schedule, compress, evaluate_cost, makespan
from .stations import (
    InitParams,
    Station,
    StationSpace,
    distance,
    goal_station,
    is_consistent,
    mutate_station,
    project,
    random_init,
    station_atoms,
)

Genome = tuple[Station, ...]

N_MAX_HARD = 20


def child_rng(seed: int, gen, idx) -> random.Random:
    tag = f"{seed}:{gen}:{idx}".encode()
    return random.Random(int.from_bytes(hashlib.sha256(tag).digest()[:8], "big"))


@dataclass(frozen=True)
class EvalResult:
    feasible: bool
    fail_index: int | None
    remaining: int
    total_makespan: int | None
    total_cost: Fraction | None
    sub_makespans: tuple[int, ...]
    sub_costs: tuple[Fraction, ...]
    schedule: Schedule | None
    sequence: tuple | None
    fitness: Fraction
    objectives: tuple[Fraction, Fraction] | None


class Evaluator:
    """Decodes genomes against one task, memoizing leg solves and whole
    genomes. `planner_calls` counts actual searches, not cache hits."""

    def __init__(
        self,
        task: GroundTask,
        space: StationSpace,
        limits: SearchLimits,
        cost_model: CostModel | None = None,
        solve_cache: dict | None = None,
    ):
        self.task = task
        self.space = space
        self.limits = limits
        self.cost_model = cost_model
        self.big = 1 + sum(a.dur for a in task.actions)
        # may be shared across runs of the same task: results are a pure
        # function of (init, goal), only the planner_calls stat depends on it
        self._solve_memo: dict[tuple[frozenset, frozenset], PlanResult] = (
            solve_cache if solve_cache is not None else {}
        )
        self._genome_memo: dict[Genome, EvalResult] = {}
        self.planner_calls = 0
        self.backtracks = 0

    def _solve_leg(self, init: WorldState, goal: frozenset) -> PlanResult:
        key = (init, goal)
        hit = self._solve_memo.get(key)
        if hit is not None:
            return hit
        res = solve(SubProblem(init, goal, self.task), self.limits)
        self.planner_calls += 1
        self.backtracks += res.backtracks_used
        self._solve_memo[key] = res
        return res

    def _leg_goal(self, st: Station) -> frozenset | None:
        ids = set()
        for atom in station_atoms(self.space, st):
            i = self.task.atom_id(atom)
            if i is None:
                return None  # atom unreachable in this task
            ids.add(i)
        return frozenset(ids)

    def _infeasible(self, fail_index: int, n_stations: int) -> EvalResult:
        remaining = n_stations + 1 - fail_index
        penalty = Fraction(self.big * (1 + remaining))
        return EvalResult(
            feasible=False,
            fail_index=fail_index,
            remaining=remaining,
            total_makespan=None,
            total_cost=None,
            sub_makespans=(),
            sub_costs=(),
            schedule=None,
            sequence=None,
            fitness=penalty,
            objectives=(penalty, penalty),
        )

    def evaluate(self, genome: Genome) -> EvalResult:
        hit = self._genome_memo.get(genome)
        if hit is not None:
            return hit
        res = self._decode(genome)
        self._genome_memo[genome] = res
        return res

    def _decode(self, genome: Genome) -> EvalResult:
        task = self.task
        n = len(genome)
        state = task.init
        sequence = []
        sub_makespans = []
        sub_costs = []
        for k in range(n + 1):
            if k < n:
                goal = self._leg_goal(genome[k])
                if goal is None:
                    return self._infeasible(k, n)
            else:
                goal = task.goal
            leg = self._solve_leg(state, goal)
            if leg.outcome is not Outcome.SOLVED:
                return self._infeasible(k, n)
            sequence.extend(leg.sequence)
            sub_makespans.append(leg.makespan)
            if self.cost_model is not None:
                sub_costs.append(evaluate_cost(leg.schedule, state, self.cost_model))
            for a in leg.sequence:
                state = apply(state, a)
        schedule = compress(sequence, task.init, task)
        total = makespan(schedule)
        f1 = Fraction(total + sum(sub_makespans), 2)
        total_cost = None
        objectives = None
        if self.cost_model is not None:
            total_cost = evaluate_cost(schedule, task.init, self.cost_model)
            moving = [c for c, m in zip(sub_costs, sub_makespans) if m > 0]
            mean_sub = sum(moving) / len(moving) if moving else Fraction(0)
            objectives = (f1, total_cost + mean_sub)
        return EvalResult(
            feasible=True,
            fail_index=None,
            remaining=0,
            total_makespan=total,
            total_cost=total_cost,
            sub_makespans=tuple(sub_makespans),
            sub_costs=tuple(sub_costs),
            schedule=schedule,
            sequence=tuple(sequence),
            fitness=f1,
            objectives=objectives,
        )


def crossover_1pt(a: Genome, b: Genome, rng, n_max: int = N_MAX_HARD) -> tuple[Genome, Genome]:
    u = rng.randint(0, len(a))
    v = rng.randint(0, len(b))
    return (a[:u] + b[v:])[:n_max], (b[:v] + a[u:])[:n_max]


def mutate_add(space: StationSpace, genome: Genome, d_max: int, rng, n_max: int = N_MAX_HARD) -> Genome:
    """Insert a copy of the left neighbor and redraw 1..d_max of its entries."""
    if len(genome) >= n_max:
        return genome
    pos = rng.randint(0, len(genome))
    left = genome[pos - 1] if pos > 0 else space.task.init
    right = genome[pos] if pos < len(genome) else goal_station(space)
    st = genome[pos - 1] if pos > 0 else project(space, space.task.init)
    nlines = len(space.lines)
    if nlines > 0:
        k = min(rng.randint(1, d_max), nlines)
        for i in rng.sample(range(nlines), k):
            new_active = st.active[:i] + (True,) + st.active[i + 1 :]
            legal = []
            for v in space.lines[i].domain:
                cand = Station(st.values[:i] + (v,) + st.values[i + 1 :], new_active)
                if not is_consistent(space, cand):
                    continue
                if distance(space, left, cand) > d_max:
                    continue
                if distance(space, cand, right) > d_max:
                    continue
                legal.append(v)
            if not legal:
                continue
            v = rng.choice(legal)
            st = Station(st.values[:i] + (v,) + st.values[i + 1 :], new_active)
    return genome[:pos] + (st,) + genome[pos:]


def mutate_del(genome: Genome, rng) -> Genome:
    if not genome:
        return genome
    i = rng.randrange(len(genome))
    return genome[:i] + genome[i + 1 :]


def mutate_stations(space: StationSpace, genome: Genome, d_max: int, rng) -> Genome:
    """Each station mutates independently with probability 1/len."""
    n = len(genome)
    if n == 0:
        return genome
    out = list(genome)
    for i in range(n):
        if rng.random() < 1.0 / n:
            left = out[i - 1] if i > 0 else space.task.init
            right = out[i + 1] if i < n - 1 else goal_station(space)
            out[i] = mutate_station(space, out[i], d_max, left, right, rng)
    return tuple(out)


def make_child(genomes: list[Genome], space: StationSpace, params: "EngineParams", rng) -> Genome:
    """25% one-point crossover (one child kept), 75% mutation split
    25/25/50 between insert, delete, and per-station change."""
    if rng.random() < 0.25:
        a = genomes[rng.randrange(len(genomes))]
        b = genomes[rng.randrange(len(genomes))]
        c1, c2 = crossover_1pt(a, b, rng, params.n_max_hard)
        return c1 if rng.random() < 0.5 else c2
    g = genomes[rng.randrange(len(genomes))]
    r = rng.random()
    if r < 0.25:
        return mutate_add(space, g, params.init.d_max, rng, params.n_max_hard)
    if r < 0.5:
        return mutate_del(g, rng)
    return mutate_stations(space, g, params.init.d_max, rng)


@dataclass(frozen=True)
class EngineParams:
    engine: str = "es"
    mu: int = 10
    lambda_: int = 70
    pop: int = 100
    gens: int = 30
    seed: int = 0
    init: InitParams = field(default_factory=InitParams)
    limits: SearchLimits = field(default_factory=SearchLimits)
    n_max_hard: int = N_MAX_HARD

    def __post_init__(self):
        if self.engine not in ("es", "nsga2"):
            raise ConfigError(f"unknown engine '{self.engine}'")
        if self.mu <= 0 or self.lambda_ < self.mu:
            raise ConfigError("need 0 < mu <= lambda")
        if self.pop < 2:
            raise ConfigError("population must hold at least two individuals")
        if self.gens < 0:
            raise ConfigError("gens must be non-negative")
        if self.n_max_hard <= 0:
            raise ConfigError("n_max_hard must be positive")


@dataclass(frozen=True)
class Individual:
    genome: Genome
    ev: EvalResult
    order: int


@dataclass(frozen=True)
class GenStats:
    generation: int
    best_fitness: Fraction
    feasible: int
    mean_length: Fraction
    planner_calls: int
    backtracks: int


@dataclass
class RunResult:
    engine: str
    seed: int
    rows: list[GenStats]
    population: list[Individual]
    best: Individual
    front: list[tuple[int, Fraction]]
    planner_calls: int
    backtracks: int


def _rank_key(ind: Individual):
    mk = ind.ev.total_makespan
    return (ind.ev.fitness, mk if mk is not None else math.inf, ind.order)


def _gen_stats(gen: int, pop: list[Individual], ev: Evaluator) -> GenStats:
    best = min(pop, key=_rank_key)
    return GenStats(
        generation=gen,
        best_fitness=best.ev.fitness,
        feasible=sum(1 for p in pop if p.ev.feasible),
        mean_length=Fraction(sum(len(p.genome) for p in pop), len(pop)),
        planner_calls=ev.planner_calls,
        backtracks=ev.backtracks,
    )


def _init_population(space: StationSpace, params: EngineParams, size: int, ev: Evaluator, order) -> list[Individual]:
    pop = []
    for i in range(size):
        rng = child_rng(params.seed, "init", i)
        g = random_init(space, params.init, rng)
        pop.append(Individual(g, ev.evaluate(g), next(order)))
    return pop


def run_es(
    task: GroundTask,
    space: StationSpace,
    params: EngineParams,
    cost_model: CostModel | None = None,
    solve_cache: dict | None = None,
) -> RunResult:
    """(mu, lambda) comma selection: parents never survive a generation."""
    ev = Evaluator(task, space, params.limits, cost_model, solve_cache)
    order = itertools.count()
    parents = _init_population(space, params, params.mu, ev, order)
    rows = [_gen_stats(0, parents, ev)]
    for gen in range(1, params.gens + 1):
        genomes = [p.genome for p in parents]
        children = []
        for idx in range(params.lambda_):
            rng = child_rng(params.seed, gen, idx)
            g = make_child(genomes, space, params, rng)
            children.append(Individual(g, ev.evaluate(g), next(order)))
        parents = sorted(children, key=_rank_key)[: params.mu]
        rows.append(_gen_stats(gen, parents, ev))
    best = min(parents, key=_rank_key)
    return RunResult(
        engine="es",
        seed=params.seed,
        rows=rows,
        population=parents,
        best=best,
        front=_population_front(parents),
        planner_calls=ev.planner_calls,
        backtracks=ev.backtracks,
    )


def dominates(p, q) -> bool:
    return all(a <= b for a, b in zip(p, q)) and any(a < b for a, b in zip(p, q))


def fast_non_dominated_sort(points) -> list[list[int]]:
    """Indices grouped into fronts; front 0 is the non-dominated set."""
    n = len(points)
    dominated: list[list[int]] = [[] for _ in range(n)]
    counts = [0] * n
    fronts: list[list[int]] = [[]]
    for p in range(n):
        for q in range(n):
            if p == q:
                continue
            if dominates(points[p], points[q]):
                dominated[p].append(q)
            elif dominates(points[q], points[p]):
                counts[p] += 1
        if counts[p] == 0:
            fronts[0].append(p)
    i = 0
    while fronts[i]:
        nxt = []
        for p in fronts[i]:
            for q in dominated[p]:
                counts[q] -= 1
                if counts[q] == 0:
                    nxt.append(q)
        fronts.append(nxt)
        i += 1
    fronts.pop()
    return fronts


def crowding_distances(points, front: list[int]) -> dict[int, Fraction]:
    """Boundary points get infinity; interior points sum normalized gaps."""
    crowd: dict[int, object] = {i: Fraction(0) for i in front}
    if not front:
        return crowd
    m = len(points[front[0]])
    for k in range(m):
        ordered = sorted(front, key=lambda i: (points[i][k], i))
        crowd[ordered[0]] = math.inf
        crowd[ordered[-1]] = math.inf
        lo = points[ordered[0]][k]
        hi = points[ordered[-1]][k]
        if hi == lo:
            continue
        for a in range(1, len(ordered) - 1):
            i = ordered[a]
            gap = Fraction(points[ordered[a + 1]][k] - points[ordered[a - 1]][k], 1) / (hi - lo)
            crowd[i] = crowd[i] + gap
    return crowd


def _population_front(pop: list[Individual]) -> list[tuple[int, Fraction]]:
    """Non-dominated raw (makespan, cost) points among feasible members."""
    pts = sorted(
        {
            (p.ev.total_makespan, p.ev.total_cost)
            for p in pop
            if p.ev.feasible and p.ev.total_cost is not None
        }
    )
    front = []
    for p in pts:
        if not any(dominates(q, p) for q in pts if q != p):
            front.append(p)
    return front


def run_nsga2(
    task: GroundTask,
    space: StationSpace,
    params: EngineParams,
    cost_model: CostModel,
    solve_cache: dict | None = None,
) -> RunResult:
    if cost_model is None:
        raise ConfigError("the multi-objective engine needs a cost model")
    ev = Evaluator(task, space, params.limits, cost_model, solve_cache)
    order = itertools.count()
    pop = _init_population(space, params, params.pop, ev, order)
    rows = [_gen_stats(0, pop, ev)]
    for gen in range(1, params.gens + 1):
        objs = [p.ev.objectives for p in pop]
        fronts = fast_non_dominated_sort(objs)
        rank = {}
        crowd = {}
        for r, fr in enumerate(fronts):
            cd = crowding_distances(objs, fr)
            for i in fr:
                rank[i] = r
                crowd[i] = cd[i]

        def pick(rng) -> Individual:
            i = rng.randrange(len(pop))
            j = rng.randrange(len(pop))
            if rank[i] != rank[j]:
                return pop[i] if rank[i] < rank[j] else pop[j]
            if crowd[i] != crowd[j]:
                return pop[i] if crowd[i] > crowd[j] else pop[j]
            return pop[i] if rng.random() < 0.5 else pop[j]

        children = []
        for idx in range(params.pop):
            rng = child_rng(params.seed, gen, idx)
            p1 = pick(rng)
            p2 = pick(rng)
            if rng.random() < 0.25:
                c1, c2 = crossover_1pt(p1.genome, p2.genome, rng, params.n_max_hard)
                g = c1 if rng.random() < 0.5 else c2
            else:
                g = p1.genome
                r = rng.random()
                if r < 0.25:
                    g = mutate_add(space, g, params.init.d_max, rng, params.n_max_hard)
                elif r < 0.5:
                    g = mutate_del(g, rng)
                else:
                    g = mutate_stations(space, g, params.init.d_max, rng)
            children.append(Individual(g, ev.evaluate(g), next(order)))

        combined = pop + children
        cobjs = [p.ev.objectives for p in combined]
        cfronts = fast_non_dominated_sort(cobjs)
        survivors: list[Individual] = []
        for fr in cfronts:
            if len(survivors) + len(fr) <= params.pop:
                survivors.extend(combined[i] for i in sorted(fr, key=lambda i: combined[i].order))
                if len(survivors) == params.pop:
                    break
                continue
            cd = crowding_distances(cobjs, fr)
            chosen = sorted(fr, key=lambda i: (-cd[i], combined[i].order))
            need = params.pop - len(survivors)
            survivors.extend(combined[i] for i in chosen[:need])
            break
        pop = survivors
        rows.append(_gen_stats(gen, pop, ev))
    best = min(pop, key=_rank_key)
    return RunResult(
        engine="nsga2",
        seed=params.seed,
        rows=rows,
        population=pop,
        best=best,
        front=_population_front(pop),
        planner_calls=ev.planner_calls,
        backtracks=ev.backtracks,
    )


def run_engine(
    task: GroundTask,
    space: StationSpace,
    params: EngineParams,
    cost_model: CostModel | None = None,
    solve_cache: dict | None = None,
) -> RunResult:
    if params.engine == "nsga2":
        return run_nsga2(task, space, params, cost_model, solve_cache)
    return run_es(task, space, params, cost_model, solve_cache)
