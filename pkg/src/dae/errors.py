"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class DaeError(Exception):
    """Base class for every error raised by this package."""


class ParseError(DaeError):
    """Malformed input text. Carries a 1-based line/column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}" + (f", column {column})" if column is not None else ")") if line is not None else ""
        super().__init__(message + where)


class UnsupportedFeature(ParseError):
    """Input uses a construct outside the supported planning subset."""


class UnknownSymbol(ParseError):
    """Reference to an undeclared predicate, type, function or object."""


class GroundingExplosion(DaeError):
    """Instantiation count exceeded the configured cap."""


class MissingStationPredicates(DaeError):
    """Invariants file declares no station predicates."""


class NotApplicable(DaeError):
    """Action applied in a state that does not satisfy its preconditions."""


class NotSequentiallyExecutable(DaeError):
    """Sequence handed to the compressor is not executable from the given state."""


class InvalidSchedule(DaeError):
    """Schedule handed to an evaluator fails validation."""


class GoalUnsupportable(DaeError):
    """A goal atom is false and no ground action adds it."""


class InitInfeasible(DaeError):
    """Genome initialization cannot place the mandatory markers."""


class CapExceeded(DaeError):
    """Enumeration exceeded the configured node cap."""


class ConfigError(DaeError):
    """Invalid or inconsistent experiment configuration."""
