"""Temporal semantics: interference, schedule validity, earliest-start compression.

Time is integer ticks. An occurrence of action a at start t occupies the
closed interval [t, t+dur(a)]; its effects apply at the end point. An atom
is true at time t iff it was true at t-1 and nothing ending at t deletes
it, or something ending at t adds it (adds win over deletes at the same
tick; at t=0 the role of "t-1" is played by the initial state and effects
ending at 0 are already visible). Preconditions of an occurrence are
evaluated at its start, excluding the occurrence's own effects, which only
matters for zero-duration actions.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right, insort
from dataclasses import dataclass, field
from fractions import Fraction

from .costs import CostModel
from .errors import InvalidSchedule, NotSequentiallyExecutable
from .grounding import GroundAction, GroundTask, WorldState
from .pddl import Atom


@dataclass(frozen=True)
class Occurrence:
    action: GroundAction
    start: int
    rank: int

    @property
    def end(self) -> int:
        return self.start + self.action.dur


@dataclass(frozen=True)
class Schedule:
    occurrences: tuple[Occurrence, ...]
    task: GroundTask = field(compare=False, repr=False)


@dataclass(frozen=True)
class Violation:
    kind: str  # "PreconditionUnmet" | "InterferenceOverlap"
    ranks: tuple[int, ...]
    time: int
    atom: Atom | None = None
    actions: tuple[str, ...] = ()


def interferes(a: GroundAction, b: GroundAction) -> bool:
    """True iff one action deletes a precondition or add effect of the other."""
    return bool(a.dels & (b.pre | b.add)) or bool(b.dels & (a.pre | a.add))


def overlaps(occ1: Occurrence, occ2: Occurrence) -> bool:
    """True iff the closed intervals share more than one integer time point."""
    lo = max(occ1.start, occ2.start)
    hi = min(occ1.end, occ2.end)
    return hi > lo


def makespan(sched: Schedule) -> int:
    return max((o.end for o in sched.occurrences), default=0)


def plan_text(sched: Schedule) -> str:
    """One occurrence per line, `t: (action args) [dur]`, by start then rank."""
    lines = []
    for o in sorted(sched.occurrences, key=lambda o: (o.start, o.rank)):
        lines.append(f"{o.start}: {o.action.label} [{o.action.dur}]")
    return "\n".join(lines) + ("\n" if lines else "")


class _Timeline:
    """States of a fixed occurrence set, sampled after each distinct end time."""

    def __init__(self, init: WorldState, occurrences):
        self.init = init
        self.ends: dict[int, list[Occurrence]] = {}
        for o in occurrences:
            self.ends.setdefault(o.end, []).append(o)
        self.times = sorted(self.ends)
        self.states: list[WorldState] = []
        state = init
        for t in self.times:
            adds, dels = set(), set()
            for o in self.ends[t]:
                adds |= o.action.add
                dels |= o.action.dels
            state = (state - frozenset(dels)) | frozenset(adds)
            self.states.append(state)

    def state_before(self, t: int) -> WorldState:
        i = bisect_left(self.times, t)
        return self.states[i - 1] if i else self.init

    def state_at(self, t: int) -> WorldState:
        i = bisect_right(self.times, t)
        return self.states[i - 1] if i else self.init

    def holds_excluding(self, atom_id: int, t: int, excluded: Occurrence) -> bool:
        """Truth of atom at t with one occurrence's own effects ignored."""
        added = deleted = False
        for o in self.ends.get(t, ()):
            if o is excluded:
                continue
            if atom_id in o.action.add:
                added = True
            if atom_id in o.action.dels:
                deleted = True
        if added:
            return True
        return atom_id in self.state_before(t) and not deleted


def validate(sched: Schedule, init: WorldState) -> list[Violation]:
    """All violations of the schedule against init; empty list means valid."""
    occs = sched.occurrences
    violations: list[Violation] = []
    for i in range(len(occs)):
        for j in range(i + 1, len(occs)):
            a, b = occs[i], occs[j]
            if interferes(a.action, b.action) and overlaps(a, b):
                violations.append(
                    Violation(
                        kind="InterferenceOverlap",
                        ranks=(a.rank, b.rank),
                        time=max(a.start, b.start),
                        actions=(a.action.label, b.action.label),
                    )
                )
    timeline = _Timeline(init, occs)
    for o in occs:
        for p in sorted(o.action.pre):
            if not timeline.holds_excluding(p, o.start, o):
                violations.append(
                    Violation(
                        kind="PreconditionUnmet",
                        ranks=(o.rank,),
                        time=o.start,
                        atom=sched.task.atoms[p],
                        actions=(o.action.label,),
                    )
                )
    return violations


class ScheduleBuilder:
    """Incremental earliest-start placement with undo, in sequence order.

    The workhorse behind compress and the planner's prefix makespans: push
    computes the minimal feasible start of the next action against the
    already-placed prefix, pop retracts the latest placement.
    """

    def __init__(self, task: GroundTask, init: WorldState):
        self.task = task
        self.init = init
        self.occs: list[Occurrence] = []
        self.strips: WorldState = init
        self._strips_stack: list[WorldState] = []
        self._times: list[int] = []  # sorted distinct end times
        self._ends: dict[int, list[Occurrence]] = {}
        self._states: list[WorldState] = []  # state after events at _times[i]

    @property
    def makespan(self) -> int:
        return self._times[-1] if self._times else 0

    def __len__(self) -> int:
        return len(self.occs)

    def _state_before(self, t: int) -> WorldState:
        i = bisect_left(self._times, t)
        return self._states[i - 1] if i else self.init

    def _rebuild_from(self, idx: int) -> None:
        state = self._states[idx - 1] if idx else self.init
        del self._states[idx:]
        for t in self._times[idx:]:
            adds, dels = set(), set()
            for o in self._ends[t]:
                adds |= o.action.add
                dels |= o.action.dels
            state = (state - frozenset(dels)) | frozenset(adds)
            self._states.append(state)

    def _feasible(self, action: GroundAction, t: int, interfering) -> bool:
        end = t + action.dur
        for o in interfering:
            lo = max(t, o.start)
            hi = min(end, o.end)
            if hi > lo:
                return False
        ends_here = self._ends.get(t, ())
        before = self._state_before(t)
        for p in action.pre:
            ok = False
            for o in ends_here:
                if p in o.action.add:
                    ok = True
                    break
            if not ok:
                ok = p in before and not any(p in o.action.dels for o in ends_here)
            if not ok:
                return False
        if action.dur == 0 and action.dels:
            # a zero-duration placement at t deletes atoms at t; occurrences
            # that start at t already had their preconditions checked without
            # those deletes, so re-check them
            for o in self.occs:
                if o.start != t or not (action.dels & o.action.pre):
                    continue
                for p in o.action.pre:
                    added = p in action.add or any(
                        x is not o and p in x.action.add for x in self._ends.get(t, ())
                    )
                    if added:
                        continue
                    deleted = p in action.dels or any(
                        x is not o and p in x.action.dels for x in self._ends.get(t, ())
                    )
                    if p not in before or deleted:
                        return False
        return True

    def push(self, action: GroundAction) -> int:
        """Place the action at its earliest feasible start; returns the start."""
        if not action.pre <= self.strips:
            raise NotSequentiallyExecutable(
                f"{action.label} at position {len(self.occs)} is not applicable in the running state"
            )
        iset = self.task.interferers(action.id)
        interfering = [o for o in self.occs if o.action.id in iset]
        t_lo = max((o.start for o in interfering), default=0)
        candidates = [t_lo]
        i = bisect_right(self._times, t_lo)
        candidates.extend(self._times[i:])
        candidates.append(max(self.makespan, t_lo) + 1)
        start = None
        for t in candidates:
            if self._feasible(action, t, interfering):
                start = t
                break
        assert start is not None  # the final candidate is always feasible
        occ = Occurrence(action, start, len(self.occs))
        self.occs.append(occ)
        self._strips_stack.append(self.strips)
        self.strips = (self.strips - action.dels) | action.add
        end = occ.end
        if end in self._ends:
            self._ends[end].append(occ)
            idx = bisect_left(self._times, end)
        else:
            self._ends[end] = [occ]
            idx = bisect_left(self._times, end)
            self._times.insert(idx, end)
        self._rebuild_from(idx)
        return start

    def pop(self) -> None:
        occ = self.occs.pop()
        self.strips = self._strips_stack.pop()
        end = occ.end
        bucket = self._ends[end]
        bucket.remove(occ)
        idx = bisect_left(self._times, end)
        if not bucket:
            del self._ends[end]
            del self._times[idx]
        self._rebuild_from(idx)

    def snapshot(self) -> Schedule:
        return Schedule(occurrences=tuple(self.occs), task=self.task)


def compress(actions, init: WorldState, task: GroundTask) -> Schedule:
    """Greedy earliest-start scheduling of a sequentially executable sequence."""
    builder = ScheduleBuilder(task, init)
    for action in actions:
        builder.push(action)
    return builder.snapshot()


def final_state(sched: Schedule, init: WorldState) -> WorldState:
    """Truth state at the makespan under the inductive definition."""
    timeline = _Timeline(init, sched.occurrences)
    return timeline.states[-1] if timeline.states else init


def _movements(task: GroundTask, action: GroundAction):
    """(mover, origin value source, destination) triples: same-predicate del/add pairs."""
    atoms = task.atoms
    moves = []
    for d in action.dels:
        dp = atoms[d]
        if len(dp.args) != 2:
            continue
        for a in action.add:
            ap = atoms[a]
            if len(ap.args) == 2 and ap.pred == dp.pred and ap.args[0] == dp.args[0] and ap.args[1] != dp.args[1]:
                moves.append((dp.args[0], dp.args[1], ap.args[1]))
    return moves


def evaluate_cost(sched: Schedule, init: WorldState, cm: CostModel) -> Fraction:
    """Accrued cost of a valid schedule under the cost model.

    Each movement occurrence (an action that deletes P(x, o) and adds
    P(x, d)) is an event worth value(o) + value(d). Additive mode scales
    each event by 1 + the number of two-place atoms (q, x) true at the
    movement's start (the passengers aboard x) and sums; max mode takes the
    maximum unscaled event value.
    """
    violations = validate(sched, init)
    if violations:
        raise InvalidSchedule(f"schedule fails validation with {len(violations)} violation(s): {violations[0]}")
    task = sched.task
    timeline = _Timeline(init, sched.occurrences)
    total = Fraction(0)
    worst = Fraction(0)
    for o in sched.occurrences:
        for mover, origin, dest in _movements(task, o.action):
            event = cm.value(origin) + cm.value(dest)
            if cm.mode == "max":
                worst = max(worst, event)
                continue
            state = timeline.state_at(o.start)
            aboard = 0
            for i in state:
                args = task.atoms[i].args
                if len(args) == 2 and args[1] == mover:
                    aboard += 1
            total += event * (1 + aboard)
    return worst if cm.mode == "max" else total
