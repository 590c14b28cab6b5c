"""Instantiate a parsed domain/problem into a finite task over indexed atoms.

Actions are every type-consistent instantiation of the operators, minus
instantiations whose duration function has no binding in the problem (no
such edge), minus actions unreachable under delete relaxation. Rational
durations become integer ticks via the least common denominator.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import GroundingExplosion
from .pddl import Atom, DomainModel, Operator, ProblemModel, TypeRef, _object_matches

# WorldState is a frozenset of atom indices everywhere downstream.
WorldState = frozenset


@dataclass(frozen=True)
class GroundAction:
    id: int
    name: str
    args: tuple[str, ...]
    pre: frozenset
    add: frozenset
    dels: frozenset
    dur: int

    @property
    def label(self) -> str:
        return "(" + " ".join((self.name,) + self.args) + ")"


@dataclass(frozen=True)
class GroundTask:
    atoms: tuple[Atom, ...]
    actions: tuple[GroundAction, ...]
    init: WorldState
    goal: frozenset
    time_scale: int
    # carried along for station construction and reporting
    objects: tuple[tuple[str, str], ...]
    type_parents: tuple[tuple[str, str], ...]
    predicates: tuple[tuple[str, tuple[TypeRef, ...]], ...]
    goal_atoms: tuple[Atom, ...]

    def atom_id(self, atom: Atom) -> int | None:
        return self._index().get(atom)

    def _index(self) -> dict:
        idx = getattr(self, "_atom_index", None)
        if idx is None:
            idx = {a: i for i, a in enumerate(self.atoms)}
            object.__setattr__(self, "_atom_index", idx)
        return idx

    def action_by_label(self, name: str, *args: str) -> GroundAction:
        for a in self.actions:
            if a.name == name and a.args == tuple(args):
                return a
        raise KeyError(f"no ground action ({name} {' '.join(args)})")

    def interferers(self, action_id: int) -> frozenset:
        """Ids of actions that interfere with this one (symmetric)."""
        table = getattr(self, "_interference", None)
        if table is None:
            table = []
            for a in self.actions:
                ids = []
                for b in self.actions:
                    if a.dels & (b.pre | b.add) or b.dels & (a.pre | a.add):
                        ids.append(b.id)
                table.append(frozenset(ids))
            object.__setattr__(self, "_interference", table)
        return table[action_id]

    def objects_of(self, tref: TypeRef) -> tuple[str, ...]:
        parents = dict(self.type_parents)
        return tuple(o for o, t in self.objects if _object_matches(t, tref, parents))

    def atom_set(self, atoms) -> frozenset:
        ids = []
        for a in atoms:
            i = self.atom_id(a)
            if i is None:
                raise KeyError(f"atom {a} outside the task universe")
            ids.append(i)
        return frozenset(ids)

    def describe(self, state: WorldState) -> str:
        return " ".join(str(self.atoms[i]) for i in sorted(state))


def _param_domains(op_params, objects, parents) -> list[tuple[str, ...]]:
    domains = []
    for _, tref in op_params:
        domains.append(tuple(o for o, t in objects if _object_matches(t, tref, parents)))
    return domains


def ground(domain: DomainModel, problem: ProblemModel, *, max_actions: int = 200_000) -> GroundTask:
    """Build the GroundTask; raises GroundingExplosion above max_actions instantiations."""
    parents = domain.type_parents()
    objects = problem.objects
    duration_table = {(fn, args): value for fn, args, value in problem.durations}

    candidates: list[tuple[str, tuple[str, ...], tuple[Atom, ...], tuple[Atom, ...], tuple[Atom, ...], Fraction]] = []
    count = 0
    for op in domain.operators:
        domains = _param_domains(op.params, objects, parents)
        names = [v for v, _ in op.params]
        for binding_values in itertools.product(*domains):
            count += 1
            if count > max_actions:
                raise GroundingExplosion(
                    f"instantiation count exceeds the cap of {max_actions}; "
                    f"the instance is beyond this tool's intended scale"
                )
            binding = dict(zip(names, binding_values))
            if op.duration.const is not None:
                dur = op.duration.const
            else:
                key = (op.duration.fn, tuple(binding[v] for v in op.duration.args))
                dur = duration_table.get(key)
                if dur is None:
                    continue  # no binding: this instantiation does not exist
            sub = lambda atom: Atom(atom.pred, tuple(binding[a] for a in atom.args))
            pre = tuple(sub(a) for a in op.pre)
            add = tuple(sub(a) for a in op.add)
            dels = tuple(sub(a) for a in op.dels)
            # normalize: an atom both added and deleted ends up added
            dels = tuple(d for d in dels if d not in add)
            candidates.append((op.name, tuple(binding[v] for v in names), pre, add, dels, dur))

    # delete-relaxed reachability from init
    reachable = set(problem.init)
    pending = list(candidates)
    changed = True
    surviving = []
    while changed:
        changed = False
        still = []
        for cand in pending:
            if all(p in reachable for p in cand[2]):
                surviving.append(cand)
                for a in cand[3]:
                    if a not in reachable:
                        reachable.add(a)
                        changed = True
            else:
                still.append(cand)
        pending = still

    surviving.sort(key=lambda c: (c[0], c[1]))

    scale = 1
    for c in surviving:
        scale = scale * c[5].denominator // math.gcd(scale, c[5].denominator)

    universe = set(problem.init) | set(problem.goal)
    for _, _, pre, add, dels, _ in surviving:
        universe.update(pre)
        universe.update(add)
        universe.update(dels)
    atoms = tuple(sorted(universe, key=lambda a: (a.pred, a.args)))
    index = {a: i for i, a in enumerate(atoms)}

    actions = tuple(
        GroundAction(
            id=i,
            name=name,
            args=args,
            pre=frozenset(index[p] for p in pre),
            add=frozenset(index[p] for p in add),
            dels=frozenset(index[p] for p in dels),
            dur=int(dur * scale),
        )
        for i, (name, args, pre, add, dels, dur) in enumerate(surviving)
    )

    return GroundTask(
        atoms=atoms,
        actions=actions,
        init=frozenset(index[p] for p in problem.init),
        goal=frozenset(index[p] for p in problem.goal),
        time_scale=scale,
        objects=objects,
        type_parents=domain.types,
        predicates=tuple((n, tuple(t for _, t in ps)) for n, ps in domain.predicates),
        goal_atoms=problem.goal,
    )
