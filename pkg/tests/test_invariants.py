"""Invariant-file parsing tests."""

import pytest

from dae.errors import ParseError, UnknownSymbol
from dae.harness import build_bundled_models, bundled_text
from dae.invariants import parse_invariants


def _domain():
    return build_bundled_models()[0]


def test_bundled_invariants():
    inv = parse_invariants(bundled_text("mini_zeno.inv"), _domain())
    assert inv.station_predicates == frozenset({"at"})
    assert inv.exclusive_index("at") == 1
    assert inv.exclusive_index("in") is None


def test_comments_and_blank_lines_ignored():
    inv = parse_invariants("\n# note\n\nstation-predicate at\nexclusive at 1\n", _domain())
    assert inv.station_predicates == frozenset({"at"})


def test_unknown_predicate_rejected():
    with pytest.raises(UnknownSymbol):
        parse_invariants("station-predicate atop\n", _domain())
    with pytest.raises(UnknownSymbol):
        parse_invariants("exclusive atop 1\n", _domain())


def test_malformed_lines_rejected():
    with pytest.raises(ParseError):
        parse_invariants("station-predicate\n", _domain())
    with pytest.raises(ParseError):
        parse_invariants("exclusive at\n", _domain())
    with pytest.raises(ParseError):
        parse_invariants("exclusive at one\n", _domain())
    with pytest.raises(ParseError):
        parse_invariants("frobnicate at\n", _domain())


def test_exclusive_index_out_of_range():
    with pytest.raises(ParseError):
        parse_invariants("station-predicate at\nexclusive at 3\n", _domain())
