"""Sub-planner tests: optimality, limits, outcomes, determinism."""

import dataclasses

import pytest

from dae.costs import CostModel
from dae.errors import GoalUnsupportable
from dae.grounding import ground
from dae.harness import brute_force_pareto
from dae.pddl import Atom, parse_domain, parse_problem
from dae.planner import (
    Outcome,
    PlanResult,
    SearchLimits,
    SubProblem,
    applicable,
    apply,
    heuristic,
    solve,
)
from dae.schedule import makespan, validate


ZERO_COST = CostModel(mode="additive", values=())


def sub_for(task, *atoms):
    return SubProblem(task.init, task.atom_set([Atom("at", a) for a in atoms]), task)


def brute_min_makespan(task, goal_ids, depth=5):
    """Independent optimum: exhaustive zero-cost front collapses to min makespan."""
    goal_atoms = tuple(task.atoms[i] for i in sorted(goal_ids))
    t = dataclasses.replace(task, goal=goal_ids, goal_atoms=goal_atoms)
    front = brute_force_pareto(t, ZERO_COST, max_depth=depth)
    points = front.points()
    return points[0][0] if points else None


def test_full_goal_solved_optimally(task):
    r = solve(SubProblem(task.init, task.goal, task), SearchLimits())
    assert r.outcome is Outcome.SOLVED
    assert r.makespan == 8
    assert r.optimal
    assert makespan(r.schedule) == 8
    assert validate(r.schedule, task.init) == []
    # the sequence replays to a goal-satisfying STRIPS state
    state = task.init
    for a in r.sequence:
        assert applicable(state, a)
        state = apply(state, a)
    assert task.goal <= state


def test_goal_already_satisfied(task):
    r = solve(SubProblem(task.init, frozenset(), task), SearchLimits())
    assert r.outcome is Outcome.SOLVED
    assert r.sequence == ()
    assert r.makespan == 0
    assert r.optimal


@pytest.mark.parametrize(
    "obj,city,expected",
    [
        ("person1", "city1", 4),
        ("person2", "city2", 8),
        ("person3", "city3", 12),
        ("person1", "city4", 8),
        ("plane1", "city1", 4),
        ("plane2", "city3", 12),
        ("plane1", "city4", 8),
    ],
)
def test_single_goal_makespans(task, obj, city, expected):
    r = solve(sub_for(task, (obj, city)), SearchLimits())
    assert r.outcome is Outcome.SOLVED
    assert r.makespan == expected
    assert r.optimal


def test_optimal_against_brute_force(task):
    # every single-fluent goal over persons and planes, versus the exhaustive
    # enumerator (no heuristics, no incumbent seeding)
    for obj in ("person1", "person2", "person3", "plane1", "plane2"):
        for city in ("city1", "city2", "city3", "city4"):
            goal = task.atom_set([Atom("at", (obj, city))])
            r = solve(SubProblem(task.init, goal, task), SearchLimits())
            assert r.outcome is Outcome.SOLVED and r.optimal
            assert r.makespan == brute_min_makespan(task, goal)


def test_pairwise_goals_against_brute_force(task):
    cases = [
        (("person1", "city1"), ("person2", "city1")),
        (("person1", "city1"), ("plane2", "city2")),
        (("person1", "city2"), ("person2", "city1")),
        (("plane1", "city1"), ("plane2", "city1")),
    ]
    for a, b in cases:
        goal = task.atom_set([Atom("at", a), Atom("at", b)])
        r = solve(SubProblem(task.init, goal, task), SearchLimits())
        assert r.outcome is Outcome.SOLVED and r.optimal
        assert r.makespan == brute_min_makespan(task, goal, depth=6)


def test_deterministic(task):
    sub = SubProblem(task.init, task.goal, task)
    r1 = solve(sub, SearchLimits())
    r2 = solve(sub, SearchLimits())
    assert r1.to_dict() == r2.to_dict()
    assert [a.label for a in r1.sequence] == [a.label for a in r2.sequence]
    assert [(o.action.label, o.start) for o in r1.schedule.occurrences] == [
        (o.action.label, o.start) for o in r2.schedule.occurrences
    ]


def test_backtrack_limit_without_incumbent(task):
    # a length cap too short for any plan, plus a tiny backtrack allowance:
    # the search retreats twice and gives up before exhausting the tree
    limits = SearchLimits(max_backtracks=2, max_sequence_length=4)
    r = solve(SubProblem(task.init, task.goal, task), limits)
    assert r.outcome is Outcome.BACKTRACK_LIMIT
    assert r.sequence is None and r.makespan is None
    assert not r.optimal


def test_limit_hit_with_incumbent_reports_solved(task):
    # the incumbent seed on this goal is poor; 30 backtracks are not enough
    # to close the gap, so the result is kept without an optimality claim
    goal = task.atom_set(
        [
            Atom("at", ("person2", "city1")),
            Atom("at", ("plane1", "city2")),
            Atom("at", ("plane2", "city1")),
        ]
    )
    r = solve(SubProblem(task.init, goal, task), SearchLimits(max_backtracks=30))
    assert r.outcome is Outcome.SOLVED
    assert not r.optimal
    assert r.makespan == 16

    full = solve(SubProblem(task.init, goal, task), SearchLimits())
    assert full.optimal
    assert full.makespan == 8


def test_seed_never_affects_certified_results(task):
    # tight limits may keep a worse plan, but a certified-optimal result and
    # the exhaustive enumerator always agree
    goal = task.atom_set([Atom("at", ("person2", "city1")), Atom("at", ("plane2", "city1"))])
    r = solve(SubProblem(task.init, goal, task), SearchLimits())
    assert r.optimal
    assert r.makespan == brute_min_makespan(task, goal, depth=6)


def test_exhaustion_below_length_cap_is_unsolvable(task):
    # person1 to city4 needs 4 actions; a cap of 3 exhausts cleanly
    goal = task.atom_set([Atom("at", ("person1", "city4"))])
    r = solve(SubProblem(task.init, goal, task), SearchLimits(max_sequence_length=3))
    assert r.outcome is Outcome.UNSOLVABLE


def test_unreachable_goal_is_unsolvable(task):
    # with no planes anywhere, nothing can restore a person fluent
    goal = task.atom_set([Atom("at", ("person1", "city1"))])
    r = solve(SubProblem(frozenset(), goal, task), SearchLimits())
    assert r.outcome is Outcome.UNSOLVABLE
    assert r.nodes_expanded == 0


def test_makespan_bound_prunes_to_unsolvable(task):
    r = solve(
        SubProblem(task.init, task.goal, task),
        SearchLimits(max_makespan_bound=7),
    )
    assert r.outcome is Outcome.UNSOLVABLE


def test_makespan_bound_admits_exact(task):
    r = solve(
        SubProblem(task.init, task.goal, task),
        SearchLimits(max_makespan_bound=8),
    )
    assert r.outcome is Outcome.SOLVED
    assert r.makespan == 8


def test_heuristic_values(task):
    assert heuristic(task.init, frozenset(), task) == 0
    assert heuristic(task.init, task.atom_set([Atom("at", ("plane1", "city1"))]), task) == 4
    # person fluents are added by zero-duration debarks
    assert heuristic(task.init, task.atom_set([Atom("at", ("person1", "city4"))]), task) == 0
    two = task.atom_set([Atom("at", ("plane1", "city1")), Atom("at", ("plane1", "city3"))])
    assert heuristic(task.init, two, task) == 12


def test_heuristic_unsupportable_goal():
    dom = parse_domain(
        """
        (define (domain oneway)
          (:requirements :strips :typing :durative-actions)
          (:types block - object)
          (:predicates (fresh ?b - block) (used ?b - block))
          (:durative-action consume
           :parameters (?b - block)
           :duration (= ?duration 1)
           :condition (and (at start (fresh ?b)))
           :effect (and (at start (not (fresh ?b))) (at end (used ?b))))
        )
        """
    )
    prob = parse_problem(
        """
        (define (problem oneway-1)
          (:domain oneway)
          (:objects b - block)
          (:init (fresh b))
          (:goal (and (used b)))
        )
        """,
        dom,
    )
    t = ground(dom, prob)
    fresh = t.atom_set([Atom("fresh", ("b",))])
    # nothing re-adds (fresh b): asking for it from an empty state must raise
    with pytest.raises(GoalUnsupportable):
        heuristic(frozenset(), fresh, t)


def test_limits_validation():
    with pytest.raises(ValueError):
        SearchLimits(max_backtracks=-1)
    with pytest.raises(ValueError):
        SearchLimits(max_sequence_length=0)


def test_to_dict_shape(task):
    r = solve(SubProblem(task.init, task.goal, task), SearchLimits())
    d = r.to_dict()
    assert d == {
        "outcome": "Solved",
        "makespan": 8,
        "length": len(r.sequence),
        "backtracks_used": r.backtracks_used,
        "nodes_expanded": r.nodes_expanded,
        "optimal": True,
    }
