"""Evolved intermediate states: partial assignments over the goal's fluent lines.

A station space has one line per (predicate, exclusive key) pair occurring
in the goal; a station assigns each line a value from the typed value
domain plus an active flag. Inactive entries impose nothing on the
sub-planner. Distances count active target entries whose key carries a
different value on the source side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DaeError, InitInfeasible
from .grounding import GroundTask, WorldState
from .invariants import InvariantSpec
from .pddl import Atom


@dataclass(frozen=True)
class StationLine:
    pred: str
    key: str
    key_slot: int  # 0-based position of the exclusive key argument
    domain: tuple[str, ...]  # legal values for the other argument
    goal_value: str


@dataclass(frozen=True)
class StationSpace:
    task: GroundTask
    lines: tuple[StationLine, ...]

    def atom(self, line: StationLine, value: str) -> Atom:
        args = [None, None]
        args[line.key_slot] = line.key
        args[1 - line.key_slot] = value
        return Atom(line.pred, tuple(args))


@dataclass(frozen=True)
class Station:
    values: tuple[str, ...]
    active: tuple[bool, ...]


def build_station_space(task: GroundTask, inv: InvariantSpec) -> StationSpace:
    predicates = dict(task.predicates)
    lines = []
    seen = set()
    for atom in task.goal_atoms:
        if atom.pred not in inv.station_predicates:
            continue
        params = predicates[atom.pred]
        if len(params) != 2:
            raise DaeError(
                f"station predicate '{atom.pred}' has arity {len(params)}; only binary predicates can form station lines"
            )
        excl = inv.exclusive_index(atom.pred)
        if excl is None:
            raise DaeError(f"station predicate '{atom.pred}' has no exclusivity declaration")
        key_slot = excl - 1
        key = atom.args[key_slot]
        if (atom.pred, key) in seen:
            continue
        seen.add((atom.pred, key))
        domain = task.objects_of(params[1 - key_slot])
        lines.append(
            StationLine(
                pred=atom.pred,
                key=key,
                key_slot=key_slot,
                domain=tuple(sorted(domain)),
                goal_value=atom.args[1 - key_slot],
            )
        )
    lines.sort(key=lambda l: (l.pred, l.key))
    return StationSpace(task=task, lines=tuple(lines))


def project(space: StationSpace, state: WorldState) -> Station:
    """The station a full state induces; keys without a value come out inactive."""
    task = space.task
    values = []
    active = []
    for line in space.lines:
        found = None
        for v in line.domain:
            i = task.atom_id(space.atom(line, v))
            if i is not None and i in state:
                found = v
                break
        if found is None:
            values.append(line.goal_value)
            active.append(False)
        else:
            values.append(found)
            active.append(True)
    return Station(tuple(values), tuple(active))


def goal_station(space: StationSpace) -> Station:
    return Station(tuple(l.goal_value for l in space.lines), (True,) * len(space.lines))


def station_atoms(space: StationSpace, st: Station) -> tuple[Atom, ...]:
    return tuple(
        space.atom(line, st.values[i]) for i, line in enumerate(space.lines) if st.active[i]
    )


def _value_of(space: StationSpace, from_, i: int):
    """Source-side value of line i: stations use their stored value even when
    inactive; full states use their projection (None when absent)."""
    if isinstance(from_, Station):
        return from_.values[i]
    line = space.lines[i]
    task = space.task
    for v in line.domain:
        a = task.atom_id(space.atom(line, v))
        if a is not None and a in from_:
            return v
    return None


def distance(space: StationSpace, from_, to: Station) -> int:
    """Active entries of `to` whose key has a different (or no) value in `from_`."""
    d = 0
    for i in range(len(space.lines)):
        if to.active[i] and _value_of(space, from_, i) != to.values[i]:
            d += 1
    return d


def is_consistent(space: StationSpace, st: Station) -> bool:
    if len(st.values) != len(space.lines) or len(st.active) != len(space.lines):
        return False
    seen_keys = set()
    for i, line in enumerate(space.lines):
        if st.values[i] not in line.domain:
            return False
        if st.active[i]:
            if (line.pred, line.key) in seen_keys:
                return False
            seen_keys.add((line.pred, line.key))
    return True


@dataclass(frozen=True)
class InitParams:
    n_range: tuple[int, int] = (2, 10)
    d_max: int = 3
    extra_moves: int = 3
    p_mask: float = 0.1

    def __post_init__(self):
        if self.n_range[0] > self.n_range[1] or self.n_range[0] < 0:
            raise ValueError("empty n_range")
        if self.d_max <= 0:
            raise ValueError("d_max must be positive")
        if not 0 <= self.p_mask <= 1:
            raise ValueError("p_mask must be a probability")


def random_init(space: StationSpace, params: InitParams, rng) -> tuple[Station, ...]:
    """The matrix procedure: anchored value fill around random move markers.

    Columns 0 and n+1 are the (fixed) initial and goal projections. Each
    line receives at least one marker, each interior column at most d_max;
    extra_moves adds further markers. A line holds its initial value before
    its first marker, its goal value from its last marker on, and a fresh
    value at the markers in between. A final sweep masks entries with
    probability p_mask, sparing any entry that is its column's only
    difference against both neighbors.
    """
    lines = space.lines
    nlines = len(lines)
    lo, hi = params.n_range
    lo_feasible = max(lo, 1, math.ceil(nlines / params.d_max))
    if lo_feasible > hi:
        raise InitInfeasible(
            f"{nlines} goal lines cannot take one move each with n <= {hi} stations of at most {params.d_max} moves"
        )
    n = rng.randint(lo_feasible, hi)

    init_station = project(space, space.task.init)
    init_values = [init_station.values[i] if init_station.active[i] else None for i in range(nlines)]
    goal_values = [l.goal_value for l in lines]

    col_load = [0] * (n + 1)  # 1-based interior columns
    markers: list[list[int]] = [[] for _ in range(nlines)]
    for li in range(nlines):
        open_cols = [c for c in range(1, n + 1) if col_load[c] < params.d_max]
        c = rng.choice(open_cols)
        markers[li].append(c)
        col_load[c] += 1
    for _ in range(params.extra_moves):
        slots = [
            (li, c)
            for li in range(nlines)
            for c in range(1, n + 1)
            if c not in markers[li] and col_load[c] < params.d_max
        ]
        if not slots:
            break
        li, c = rng.choice(slots)
        markers[li].append(c)
        col_load[c] += 1

    values = [[None] * (n + 2) for _ in range(nlines)]
    for li in range(nlines):
        marks = sorted(markers[li])
        values[li][0] = init_values[li]
        values[li][n + 1] = goal_values[li]
        segment = init_values[li]
        for c in range(1, n + 1):
            if c in marks:
                if c == marks[-1]:
                    segment = goal_values[li]
                else:
                    fresh = [v for v in lines[li].domain if v != segment]
                    segment = rng.choice(fresh) if fresh else segment
            values[li][c] = segment

    def differs(li: int, c1: int, c2: int) -> bool:
        return values[li][c1] != values[li][c2]

    active = [[True] * (n + 2) for _ in range(nlines)]
    for li in range(nlines):
        for c in range(1, n + 1):
            if rng.random() >= params.p_mask:
                continue
            sole_left = differs(li, c - 1, c) and not any(
                differs(lj, c - 1, c) for lj in range(nlines) if lj != li
            )
            sole_right = differs(li, c, c + 1) and not any(
                differs(lj, c, c + 1) for lj in range(nlines) if lj != li
            )
            if sole_left and sole_right:
                continue
            active[li][c] = False

    stations = []
    for c in range(1, n + 1):
        vals = []
        act = []
        for li in range(nlines):
            v = values[li][c]
            if v is None:
                vals.append(goal_values[li])
                act.append(False)
            else:
                vals.append(v)
                act.append(active[li][c])
        stations.append(Station(tuple(vals), tuple(act)))
    return tuple(stations)


def mutate_station(
    space: StationSpace,
    st: Station,
    d_max: int,
    left,
    right,
    rng,
    rates: tuple[float, float, float] = (0.75, 0.125, 0.125),
) -> Station:
    """One of: redraw an active value (p=rates[0]), mask an entry, unmask one.

    Redraw and unmask keep the station consistent and within d_max of both
    neighbors; an operation with no legal target returns the station
    unchanged.
    """
    nlines = len(space.lines)
    if nlines == 0:
        return st
    r = rng.random()

    def legal_values(i: int, candidate_active: tuple[bool, ...]) -> list[str]:
        out = []
        for v in space.lines[i].domain:
            vals = st.values[:i] + (v,) + st.values[i + 1 :]
            cand = Station(vals, candidate_active)
            if not is_consistent(space, cand):
                continue
            if left is not None and distance(space, left, cand) > d_max:
                continue
            if right is not None and distance(space, cand, right) > d_max:
                continue
            out.append(v)
        return out

    if r < rates[0]:
        active_idx = [i for i in range(nlines) if st.active[i]]
        if not active_idx:
            return st
        i = rng.choice(active_idx)
        legal = legal_values(i, st.active)
        if not legal:
            return st
        v = rng.choice(legal)
        return Station(st.values[:i] + (v,) + st.values[i + 1 :], st.active)
    if r < rates[0] + rates[1]:
        active_idx = [i for i in range(nlines) if st.active[i]]
        if not active_idx:
            return st
        i = rng.choice(active_idx)
        return Station(st.values, st.active[:i] + (False,) + st.active[i + 1 :])
    inactive_idx = [i for i in range(nlines) if not st.active[i]]
    if not inactive_idx:
        return st
    i = rng.choice(inactive_idx)
    new_active = st.active[:i] + (True,) + st.active[i + 1 :]
    legal = legal_values(i, new_active)
    if not legal:
        return st
    v = rng.choice(legal)
    return Station(st.values[:i] + (v,) + st.values[i + 1 :], new_active)


def dump_genome(space: StationSpace, genome) -> str:
    """Log format: one station per block, `pred key -> value` or `-> #masked`."""
    blocks = []
    for idx, st in enumerate(genome, start=1):
        lines = [f"station {idx}"]
        for i, line in enumerate(space.lines):
            target = st.values[i] if st.active[i] else "#masked"
            lines.append(f"  {line.pred} {line.key} -> {target}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")
