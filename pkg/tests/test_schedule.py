"""Temporal semantics tests: interference, overlap, validation, compression, cost."""

import random
from fractions import Fraction

import pytest

from dae.errors import InvalidSchedule, NotSequentiallyExecutable
from dae.schedule import (
    Occurrence,
    Schedule,
    ScheduleBuilder,
    compress,
    evaluate_cost,
    final_state,
    interferes,
    makespan,
    overlaps,
    plan_text,
    validate,
)

from _support import random_walk, the_800_plan


def occ(action, start, rank):
    return Occurrence(action, start, rank)


def sched(task, *pairs):
    return Schedule(tuple(occ(a, t, i) for i, (a, t) in enumerate(pairs)), task)


# --- interference and overlap ----------------------------------------------


def test_interferes_fly_vs_board(task):
    fly = task.action_by_label("fly", "plane1", "city0", "city1")
    board = task.action_by_label("board", "person1", "plane1", "city0")
    # fly deletes (at plane1 city0), a precondition of board
    assert interferes(fly, board)
    assert interferes(board, fly)


def test_no_interference_between_disjoint_flights(task):
    a = task.action_by_label("fly", "plane1", "city0", "city1")
    b = task.action_by_label("fly", "plane2", "city2", "city4")
    assert not interferes(a, b)


def test_self_interference(task):
    fly = task.action_by_label("fly", "plane1", "city0", "city1")
    assert interferes(fly, fly)  # deletes its own precondition


def test_overlaps_endpoint_meeting_is_not_overlap(task):
    fly01 = task.action_by_label("fly", "plane1", "city0", "city1")
    fly14 = task.action_by_label("fly", "plane1", "city1", "city4")
    assert not overlaps(occ(fly01, 0, 0), occ(fly14, 4, 1))  # [0,4] meets [4,8]
    assert overlaps(occ(fly01, 0, 0), occ(fly01, 2, 1))  # [0,4] vs [2,6]


def test_zero_duration_occurrences_never_overlap(task):
    b1 = task.action_by_label("board", "person1", "plane1", "city0")
    b2 = task.action_by_label("board", "person2", "plane1", "city0")
    assert not overlaps(occ(b1, 3, 0), occ(b2, 3, 1))
    fly = task.action_by_label("fly", "plane1", "city0", "city1")
    assert not overlaps(occ(b1, 2, 0), occ(fly, 0, 1))  # [2,2] inside [0,4]


# --- validate ---------------------------------------------------------------


def test_validate_ok_simple_chain(task):
    b = task.action_by_label("board", "person1", "plane1", "city0")
    f = task.action_by_label("fly", "plane1", "city0", "city1")
    d = task.action_by_label("debark", "person1", "plane1", "city1")
    s = sched(task, (b, 0), (f, 0), (d, 4))
    assert validate(s, task.init) == []


def test_validate_zero_duration_effects_visible_at_zero(task):
    # board's add ends at t=0 and must already support debark at t=0
    b = task.action_by_label("board", "person1", "plane1", "city0")
    d = task.action_by_label("debark", "person1", "plane1", "city0")
    s = sched(task, (b, 0), (d, 0))
    assert validate(s, task.init) == []


def test_validate_own_delete_does_not_block(task):
    # board deletes its own precondition (at person1 city0); still fine
    b = task.action_by_label("board", "person1", "plane1", "city0")
    assert validate(sched(task, (b, 0)), task.init) == []


def test_validate_adds_win_over_deletes(task):
    # at t=0: board deletes (at person1 city0), debark re-adds it, and a
    # second board consumes it again - the add ending at 0 keeps it true
    b1 = task.action_by_label("board", "person1", "plane1", "city0")
    d1 = task.action_by_label("debark", "person1", "plane1", "city0")
    b2 = task.action_by_label("board", "person1", "plane2", "city0")
    s = sched(task, (b1, 0), (d1, 0), (b2, 0))
    assert validate(s, task.init) == []


def test_validate_precondition_unmet(task):
    f = task.action_by_label("fly", "plane1", "city1", "city4")
    (v,) = validate(sched(task, (f, 0)), task.init)
    assert v.kind == "PreconditionUnmet"
    assert v.time == 0
    assert str(v.atom) == "(at plane1 city1)"


def test_validate_interference_overlap(task):
    f = task.action_by_label("fly", "plane1", "city0", "city1")
    s = sched(task, (f, 0), (f, 1))  # same plane, [0,4] vs [1,5]
    (v,) = validate(s, task.init)
    assert v.kind == "InterferenceOverlap"
    assert v.ranks == (0, 1)


def test_validate_returns_all_violations(task):
    f1 = task.action_by_label("fly", "plane1", "city0", "city1")
    f2 = task.action_by_label("fly", "plane1", "city1", "city4")
    s = sched(task, (f1, 0), (f2, 2))
    kinds = sorted(v.kind for v in validate(s, task.init))
    assert kinds == ["InterferenceOverlap", "PreconditionUnmet"]


# --- compress ----------------------------------------------------------------


def test_compress_full_parallelism(task):
    a = task.action_by_label("fly", "plane1", "city0", "city1")
    b = task.action_by_label("fly", "plane2", "city0", "city2")
    s = compress([a, b], task.init, task)
    assert [o.start for o in s.occurrences] == [0, 0]
    assert makespan(s) == 8


def test_compress_causal_chain(task):
    f1 = task.action_by_label("fly", "plane1", "city0", "city1")
    f2 = task.action_by_label("fly", "plane1", "city1", "city4")
    s = compress([f1, f2], task.init, task)
    assert [o.start for o in s.occurrences] == [0, 4]
    assert makespan(s) == 8


def test_compress_board_fly_debark(task):
    b = task.action_by_label("board", "person1", "plane1", "city0")
    f = task.action_by_label("fly", "plane1", "city0", "city1")
    d = task.action_by_label("debark", "person1", "plane1", "city1")
    s = compress([b, f, d], task.init, task)
    assert [o.start for o in s.occurrences] == [0, 0, 4]
    assert makespan(s) == 4


def test_compress_two_subplans_interleave(task):
    # plane1 carries person1 via city1 (8 ticks); plane2 carries person2 via
    # city2 (16 ticks); the sequential concatenation compresses to max(8,16)
    sub1 = [
        task.action_by_label("board", "person1", "plane1", "city0"),
        task.action_by_label("fly", "plane1", "city0", "city1"),
        task.action_by_label("fly", "plane1", "city1", "city4"),
        task.action_by_label("debark", "person1", "plane1", "city4"),
    ]
    sub2 = [
        task.action_by_label("board", "person2", "plane2", "city0"),
        task.action_by_label("fly", "plane2", "city0", "city2"),
        task.action_by_label("fly", "plane2", "city2", "city4"),
        task.action_by_label("debark", "person2", "plane2", "city4"),
    ]
    s = compress(sub1 + sub2, task.init, task)
    assert makespan(s) == 16
    assert validate(s, task.init) == []

    # no interleaving of the two sub-plans does better
    best = None

    def weave(i, j, seq):
        nonlocal best
        if i == len(sub1) and j == len(sub2):
            mk = makespan(compress(seq, task.init, task))
            best = mk if best is None else min(best, mk)
            return
        if i < len(sub1):
            weave(i + 1, j, seq + [sub1[i]])
        if j < len(sub2):
            weave(i, j + 1, seq + [sub2[j]])

    weave(0, 0, [])
    assert best == 16


def test_compress_preserves_interfering_order(task):
    f1 = task.action_by_label("fly", "plane1", "city0", "city1")
    f2 = task.action_by_label("fly", "plane1", "city1", "city0")
    s = compress([f1, f2, f1], task.init, task)
    starts = [o.start for o in s.occurrences]
    assert starts == sorted(starts)
    assert makespan(s) == 12


def test_compress_same_action_same_tick(task):
    # a repeated zero-duration action lands on the same tick; the makespan
    # bound must survive (same action may occur more than once)
    b = task.action_by_label("board", "person1", "plane1", "city0")
    d = task.action_by_label("debark", "person1", "plane1", "city0")
    s = compress([b, d, b], task.init, task)
    assert makespan(s) == 0
    assert validate(s, task.init) == []


def test_compress_rejects_non_executable(task):
    f = task.action_by_label("fly", "plane1", "city1", "city4")
    with pytest.raises(NotSequentiallyExecutable):
        compress([f], task.init, task)


def test_compress_idempotent_and_bounded(task):
    rng = random.Random(7)
    for _ in range(300):
        seq = random_walk(task, rng, rng.randint(1, 10))
        s = compress(seq, task.init, task)
        assert validate(s, task.init) == []
        assert makespan(s) <= sum(a.dur for a in seq)
        again = compress([o.action for o in s.occurrences], task.init, task)
        assert [o.start for o in again.occurrences] == [o.start for o in s.occurrences]


def test_compress_fully_sequential_when_all_interfere(task):
    # same plane back and forth: every adjacent pair interferes -> equality
    f1 = task.action_by_label("fly", "plane1", "city0", "city1")
    f2 = task.action_by_label("fly", "plane1", "city1", "city0")
    seq = [f1, f2, f1, f2]
    for a, b in zip(seq, seq[1:]):
        assert interferes(a, b)
    assert makespan(compress(seq, task.init, task)) == sum(a.dur for a in seq)


# --- builder ----------------------------------------------------------------


def test_builder_push_pop_round_trip(task):
    rng = random.Random(21)
    for _ in range(50):
        seq = random_walk(task, rng, 8)
        sb = ScheduleBuilder(task, task.init)
        states = [(sb.makespan, sb.strips)]
        for a in seq:
            sb.push(a)
            states.append((sb.makespan, sb.strips))
        for _ in seq:
            sb.pop()
            states.pop()
            assert (sb.makespan, sb.strips) == states[-1]
        assert len(sb) == 0


def test_builder_prefix_makespan_monotone(task):
    rng = random.Random(22)
    for _ in range(50):
        seq = random_walk(task, rng, 10)
        sb = ScheduleBuilder(task, task.init)
        prefix_starts = []
        for a in seq:
            sb.push(a)
            prefix_starts.append([o.start for o in sb.occs])
        # placements never move once made
        for shorter, longer in zip(prefix_starts, prefix_starts[1:]):
            assert longer[: len(shorter)] == shorter


# --- final state -------------------------------------------------------------


def test_final_state_matches_strips_on_plain_plans(task):
    plan = the_800_plan(task)
    s = compress(plan, task.init, task)
    state = task.init
    from dae.planner import apply

    for a in plan:
        state = apply(state, a)
    assert final_state(s, task.init) == state


def test_final_state_can_strictly_exceed_strips(task):
    # board and debark on the same tick: the add wins, so (in person1 plane1)
    # stays formally true even though the running STRIPS state drops it
    b = task.action_by_label("board", "person1", "plane1", "city0")
    d = task.action_by_label("debark", "person1", "plane1", "city0")
    sb = ScheduleBuilder(task, task.init)
    sb.push(b)
    sb.push(d)
    formal = final_state(sb.snapshot(), task.init)
    in_atom = task.atom_id(task.atoms[next(iter(b.add))])
    assert in_atom in formal
    assert in_atom not in sb.strips
    assert sb.strips < formal


# --- makespan and plan text --------------------------------------------------


def test_makespan_empty_and_single(task):
    assert makespan(Schedule((), task)) == 0
    f = task.action_by_label("fly", "plane1", "city0", "city2")
    assert makespan(sched(task, (f, 0))) == 8


def test_plan_text_format(task):
    b = task.action_by_label("board", "person1", "plane1", "city0")
    f = task.action_by_label("fly", "plane1", "city0", "city1")
    d = task.action_by_label("debark", "person1", "plane1", "city1")
    s = compress([b, f, d], task.init, task)
    assert plan_text(s) == (
        "0: (board person1 plane1 city0) [0]\n"
        "0: (fly plane1 city0 city1) [4]\n"
        "4: (debark person1 plane1 city1) [0]\n"
    )


# --- cost evaluation ----------------------------------------------------------


def test_cost_of_canonical_plan(task, cost_add, cost_max):
    s = compress(the_800_plan(task), task.init, task)
    assert makespan(s) == 8
    assert evaluate_cost(s, task.init, cost_add) == Fraction(800)
    assert evaluate_cost(s, task.init, cost_max) == Fraction(100)


def test_cost_scales_with_occupancy(task, cost_add):
    # two persons aboard -> multiplier 3 on each flight leg
    plan = [
        task.action_by_label("board", "person1", "plane1", "city0"),
        task.action_by_label("board", "person2", "plane1", "city0"),
        task.action_by_label("fly", "plane1", "city0", "city1"),
        task.action_by_label("fly", "plane1", "city1", "city4"),
        task.action_by_label("debark", "person1", "plane1", "city4"),
        task.action_by_label("debark", "person2", "plane1", "city4"),
    ]
    s = compress(plan, task.init, task)
    assert evaluate_cost(s, task.init, cost_add) == Fraction(600)


def test_cost_empty_flight_and_boards_free(task, cost_add):
    f = task.action_by_label("fly", "plane1", "city0", "city1")
    s = compress([f], task.init, task)
    assert evaluate_cost(s, task.init, cost_add) == Fraction(100)
    b = task.action_by_label("board", "person1", "plane1", "city0")
    s2 = compress([b], task.init, task)
    assert evaluate_cost(s2, task.init, cost_add) == Fraction(0)


def test_cost_empty_schedule(task, cost_add):
    assert evaluate_cost(Schedule((), task), task.init, cost_add) == Fraction(0)


def test_cost_max_ignores_occupancy(task, cost_max):
    one = compress(
        [
            task.action_by_label("board", "person1", "plane1", "city0"),
            task.action_by_label("fly", "plane1", "city0", "city2"),
        ],
        task.init,
        task,
    )
    empty = compress(
        [task.action_by_label("fly", "plane1", "city0", "city2")], task.init, task
    )
    assert evaluate_cost(one, task.init, cost_max) == Fraction(10)
    assert evaluate_cost(empty, task.init, cost_max) == Fraction(10)


def test_cost_rejects_invalid_schedule(task, cost_add):
    f = task.action_by_label("fly", "plane1", "city1", "city4")
    with pytest.raises(InvalidSchedule):
        evaluate_cost(sched(task, (f, 0)), task.init, cost_add)
