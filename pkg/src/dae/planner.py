"""Exact solver for small sub-problems: depth-first branch and bound over
action sequences, minimizing the makespan of the compressed schedule.

Expansion follows action-id order, so results are fully deterministic,
including node and backtrack counts. A backtrack is counted every time the
search retreats from a node after exhausting or pruning its children.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import GoalUnsupportable, NotApplicable
from .grounding import GroundAction, GroundTask, WorldState
from .schedule import Schedule, ScheduleBuilder


class Outcome(Enum):
    SOLVED = "Solved"
    BACKTRACK_LIMIT = "BacktrackLimit"
    UNSOLVABLE = "Unsolvable"


@dataclass(frozen=True)
class SubProblem:
    init: WorldState
    goal: frozenset
    task: GroundTask


@dataclass(frozen=True)
class SearchLimits:
    max_backtracks: int = 10_000
    max_sequence_length: int = 14
    max_makespan_bound: int | None = None

    def __post_init__(self):
        if self.max_backtracks < 0:
            raise ValueError("max_backtracks must be non-negative")
        if self.max_sequence_length <= 0:
            raise ValueError("max_sequence_length must be positive")


@dataclass(frozen=True)
class PlanResult:
    outcome: Outcome
    sequence: tuple[GroundAction, ...] | None
    schedule: Schedule | None
    makespan: int | None
    backtracks_used: int
    nodes_expanded: int
    optimal: bool

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "makespan": self.makespan,
            "length": len(self.sequence) if self.sequence is not None else None,
            "backtracks_used": self.backtracks_used,
            "nodes_expanded": self.nodes_expanded,
            "optimal": self.optimal,
        }


def applicable(state: WorldState, action: GroundAction) -> bool:
    return action.pre <= state


def apply(state: WorldState, action: GroundAction) -> WorldState:
    if not action.pre <= state:
        raise NotApplicable(f"{action.label} is not applicable here")
    return (state - action.dels) | action.add


def heuristic(state: WorldState, goal: frozenset, task: GroundTask) -> int:
    """Max over unsatisfied goal atoms of the cheapest adder's duration.

    Admissible under compression: outstanding atoms may be achieved in
    parallel, so only the largest single-adder duration is forced. Raises
    GoalUnsupportable when an unsatisfied atom has no adder at all.
    """
    h = 0
    for g in goal:
        if g in state:
            continue
        best = None
        for a in task.actions:
            if g in a.add and (best is None or a.dur < best):
                best = a.dur
                if best == 0:
                    break
        if best is None:
            raise GoalUnsupportable(f"goal atom {task.atoms[g]} has no achiever")
        h = max(h, best)
    return h


def _relaxed_times(task: GroundTask, state: WorldState) -> dict:
    """Delete-relaxed earliest truth time of each reachable atom from state.

    Never overestimates the time the atom can first be true in any valid
    schedule from state: an atom true at t was either initial or added by
    an occurrence whose preconditions were true at its start.
    """
    dist: dict[int, int] = {i: 0 for i in state}
    changed = True
    while changed:
        changed = False
        for a in task.actions:
            t = 0
            for p in a.pre:
                dp = dist.get(p)
                if dp is None:
                    t = None
                    break
                if dp > t:
                    t = dp
            if t is None:
                continue
            e = t + a.dur
            for p in a.add:
                if dist.get(p, math.inf) > e:
                    dist[p] = e
                    changed = True
    return dist


def _achiever_start(action: GroundAction, dist: dict) -> int | None:
    t = 0
    for q in action.pre:
        dq = dist.get(q)
        if dq is None:
            return None
        if dq > t:
            t = dq
    return t


def _goal_bounds(task: GroundTask, init: WorldState, goal: frozenset) -> dict:
    """Per goal atom, a lower bound on the end time of any occurrence that
    could make it true in a schedule compressed from init: min over its
    adders of relaxed(preconditions) + duration. None marks an atom nothing
    reachable adds. A node whose sequential state misses the atom forces
    such an occurrence into the remaining plan, and every occurrence ends
    at or before the makespan.
    """
    dist = _relaxed_times(task, init)
    table = {}
    for g in goal:
        best = None
        for a in task.actions:
            if g not in a.add:
                continue
            t = _achiever_start(a, dist)
            if t is None:
                continue
            e = t + a.dur
            if best is None or e < best:
                best = e
        table[g] = best
    return table


def _helpful_action(task: GroundTask, state: WorldState, goal: frozenset, dist: dict) -> GroundAction | None:
    """An applicable first step of a delete-relaxed plan for goal, if any.

    Backchains from the unsatisfied goal atoms through each atom's cheapest
    achiever and returns the lowest-id achiever whose preconditions already
    hold. Purely a guide for the greedy upper-bound seed.
    """
    pending = sorted(g for g in goal if g not in state)
    marked = set(pending)
    applicable_best = None
    while pending:
        p = pending.pop()
        best_a = None
        best_e = None
        for a in task.actions:
            if p not in a.add:
                continue
            t = _achiever_start(a, dist)
            if t is None:
                continue
            e = t + a.dur
            if best_e is None or e < best_e or (e == best_e and a.id < best_a.id):
                best_a, best_e = a, e
        if best_a is None:
            return None
        if best_a.pre <= state:
            if applicable_best is None or best_a.id < applicable_best.id:
                applicable_best = best_a
        else:
            for q in sorted(best_a.pre):
                if q not in state and q not in marked:
                    marked.add(q)
                    pending.append(q)
    return applicable_best


def _greedy_seed(task: GroundTask, init: WorldState, goal: frozenset, limits: SearchLimits):
    """A quick feasible sequence reaching goal, or None. Used only to open
    the search with an incumbent; optimality never depends on it."""
    state = init
    seen = {init}
    seq: list[GroundAction] = []
    while len(seq) < limits.max_sequence_length:
        if goal <= state:
            return seq
        choice = _helpful_action(task, state, goal, _relaxed_times(task, state))
        nxt = None
        if choice is not None:
            ns = (state - choice.dels) | choice.add
            if ns not in seen:
                nxt = (choice, ns)
        if nxt is None:
            for a in task.actions:
                if a.pre <= state:
                    ns = (state - a.dels) | a.add
                    if ns not in seen:
                        nxt = (a, ns)
                        break
            if nxt is None:
                return None
        seq.append(nxt[0])
        state = nxt[1]
        seen.add(state)
    return seq if goal <= state else None


def solve(sub: SubProblem, limits: SearchLimits) -> PlanResult:
    """Branch and bound; optimal when limits were not exhausted.

    Prunes a node when max(prefix makespan, heuristic) meets the incumbent,
    and keeps a per-call visited map state -> best (makespan, depth) seen,
    skipping dominated revisits. The incumbent orders candidates by
    (makespan, sequence length, discovery order).
    """
    task = sub.task
    goal = sub.goal
    bounds = _goal_bounds(task, sub.init, goal)

    def h_of(state: WorldState) -> int | None:
        h = 0
        for g in goal:
            if g in state:
                continue
            best = bounds[g]
            if best is None:
                return None  # unreachable from this leg's start
            h = max(h, best)
        return h

    builder = ScheduleBuilder(task, sub.init)
    threshold = math.inf if limits.max_makespan_bound is None else limits.max_makespan_bound + 1
    best_seq: tuple[GroundAction, ...] | None = None
    best_schedule: Schedule | None = None
    best_makespan = threshold
    best_len = math.inf
    # state -> mutually non-dominated (makespan, depth) pairs already expanded
    visited: dict[WorldState, list[tuple[int, int]]] = {}
    nodes = 0
    backtracks = 0
    limit_hit = False

    root_dead = h_of(sub.init) is None

    if not root_dead:
        seed = _greedy_seed(task, sub.init, goal, limits)
        if seed is not None:
            for a in seed:
                builder.push(a)
            if builder.makespan < best_makespan:
                best_makespan = builder.makespan
                best_len = len(seed)
                best_seq = tuple(seed)
                best_schedule = builder.snapshot()
            for _ in seed:
                builder.pop()

    def dfs(state: WorldState, depth: int) -> None:
        nonlocal nodes, backtracks, best_seq, best_schedule, best_makespan, best_len, limit_hit
        nodes += 1
        if goal <= state:
            mk = builder.makespan
            if mk < best_makespan or (mk == best_makespan and depth < best_len):
                best_makespan = mk
                best_len = depth
                best_seq = tuple(o.action for o in builder.occs)
                best_schedule = builder.snapshot()
            return
        if depth >= limits.max_sequence_length:
            return
        h = h_of(state)
        if h is None:
            return
        if max(builder.makespan, h) >= best_makespan:
            return
        here = (builder.makespan, depth)
        bucket = visited.get(state)
        if bucket is None:
            visited[state] = [here]
        else:
            if any(mk <= here[0] and d <= here[1] for mk, d in bucket):
                return
            bucket[:] = [p for p in bucket if not (here[0] <= p[0] and here[1] <= p[1])]
            bucket.append(here)
        expanded = False
        for action in task.actions:
            if limit_hit:
                break
            if not action.pre <= state:
                continue
            expanded = True
            child = (state - action.dels) | action.add
            if not goal <= child:
                # cheap pre-push cuts: the child's makespan is at least the
                # parent's, so these rejections match what its own entry
                # checks would conclude, without paying for a placement
                hc = h_of(child)
                if hc is None or max(builder.makespan, hc) >= best_makespan:
                    continue
                if depth + 1 >= limits.max_sequence_length:
                    continue
                bucket = visited.get(child)
                if bucket is not None and any(
                    mk <= builder.makespan and d <= depth + 1 for mk, d in bucket
                ):
                    continue
            builder.push(action)
            dfs(child, depth + 1)
            builder.pop()
        if expanded and not limit_hit:
            if backtracks + 1 > limits.max_backtracks:
                limit_hit = True  # this retreat would exceed the allowance
            else:
                backtracks += 1

    if not root_dead:
        dfs(sub.init, 0)

    if best_seq is not None:
        return PlanResult(
            outcome=Outcome.SOLVED,
            sequence=best_seq,
            schedule=best_schedule,
            makespan=best_makespan,
            backtracks_used=backtracks,
            nodes_expanded=nodes,
            optimal=not limit_hit,
        )
    if limit_hit:
        return PlanResult(Outcome.BACKTRACK_LIMIT, None, None, None, backtracks, nodes, False)
    return PlanResult(Outcome.UNSOLVABLE, None, None, None, backtracks, nodes, True)
