"""Cost/risk side model: rational values attached to objects (cities).

File format, `#` comments allowed:
    mode additive|max
    accrual origin-dest-occupancy      # optional, the only rule defined
    value <object> <rational>
Objects absent from the file carry value 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ParseError, UnknownSymbol

ACCRUAL_DEFAULT = "origin-dest-occupancy"


@dataclass(frozen=True)
class CostModel:
    mode: str  # "additive" | "max"
    values: tuple[tuple[str, Fraction], ...]
    accrual: str = ACCRUAL_DEFAULT

    def value(self, obj: str) -> Fraction:
        for name, v in self.values:
            if name == obj:
                return v
        return Fraction(0)


def parse_cost(text: str, known_objects=None) -> CostModel:
    mode: str | None = None
    accrual = ACCRUAL_DEFAULT
    values: dict[str, Fraction] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "mode":
            if len(parts) != 2 or parts[1] not in ("additive", "max"):
                raise ParseError("mode must be 'additive' or 'max'", lineno)
            if mode is not None and mode != parts[1]:
                raise ParseError("conflicting mode lines", lineno)
            mode = parts[1]
        elif parts[0] == "accrual":
            if len(parts) != 2 or parts[1] != ACCRUAL_DEFAULT:
                raise ParseError(f"unknown accrual rule (only '{ACCRUAL_DEFAULT}' is defined)", lineno)
            accrual = parts[1]
        elif parts[0] == "value":
            if len(parts) != 3:
                raise ParseError("value takes an object and a rational", lineno)
            obj = parts[1]
            if known_objects is not None and obj not in known_objects:
                raise UnknownSymbol(f"unknown object '{obj}'", lineno)
            try:
                v = Fraction(parts[2])
            except (ValueError, ZeroDivisionError):
                raise ParseError(f"bad rational '{parts[2]}'", lineno) from None
            if v < 0:
                raise ParseError("values must be non-negative", lineno)
            if values.get(obj, v) != v:
                raise ParseError(f"conflicting values for '{obj}'", lineno)
            values[obj] = v
        else:
            raise ParseError(f"unknown directive '{parts[0]}'", lineno)
    if mode is None:
        raise ParseError("missing 'mode' line")
    return CostModel(mode=mode, values=tuple(sorted(values.items())), accrual=accrual)
