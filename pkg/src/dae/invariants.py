"""Sidecar invariants file: which predicates form stations and their exclusive key.

Line format, one directive per line, `#` comments:
    station-predicate <name>
    exclusive <name> <1-based-arg-index>
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import MissingStationPredicates, ParseError, UnknownSymbol
from .pddl import DomainModel


@dataclass(frozen=True)
class InvariantSpec:
    station_predicates: frozenset
    exclusivity: tuple[tuple[str, int], ...]  # (predicate, 1-based key index)

    def exclusive_index(self, pred: str) -> int | None:
        for name, idx in self.exclusivity:
            if name == pred:
                return idx
        return None


def parse_invariants(text: str, domain: DomainModel) -> InvariantSpec:
    predicates = domain.predicate_map()
    station: set[str] = set()
    exclusivity: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "station-predicate":
            if len(parts) != 2:
                raise ParseError("station-predicate takes exactly one name", lineno)
            if parts[1] not in predicates:
                raise UnknownSymbol(f"unknown predicate '{parts[1]}'", lineno)
            station.add(parts[1])
        elif parts[0] == "exclusive":
            if len(parts) != 3:
                raise ParseError("exclusive takes a predicate and an argument index", lineno)
            name = parts[1]
            if name not in predicates:
                raise UnknownSymbol(f"unknown predicate '{name}'", lineno)
            try:
                idx = int(parts[2])
            except ValueError:
                raise ParseError(f"argument index '{parts[2]}' is not an integer", lineno) from None
            if not 1 <= idx <= len(predicates[name]):
                raise ParseError(
                    f"exclusive index {idx} out of range for '{name}' with arity {len(predicates[name])}", lineno
                )
            if exclusivity.get(name, idx) != idx:
                raise ParseError(f"conflicting exclusive declarations for '{name}'", lineno)
            exclusivity[name] = idx
        else:
            raise ParseError(f"unknown directive '{parts[0]}'", lineno)
    if not station:
        raise MissingStationPredicates("invariants file declares no station predicates")
    return InvariantSpec(frozenset(station), tuple(sorted(exclusivity.items())))
