"""Cost-model parsing tests."""

from fractions import Fraction

import pytest

from dae.costs import parse_cost
from dae.errors import ParseError, UnknownSymbol
from dae.harness import bundled_text


def test_bundled_additive():
    cm = parse_cost(bundled_text("mini_zeno_cost_additive.txt"))
    assert cm.mode == "additive"
    assert cm.value("city1") == 100
    assert cm.value("city2") == 10
    assert cm.value("city3") == 1
    assert cm.value("city0") == 0  # absent objects default to 0
    assert cm.value("city4") == 0


def test_bundled_max():
    cm = parse_cost(bundled_text("mini_zeno_cost_max.txt"))
    assert cm.mode == "max"
    assert cm.value("city1") == 100


def test_rational_values():
    cm = parse_cost("mode additive\nvalue a 1/2\nvalue b 3\n")
    assert cm.value("a") == Fraction(1, 2)
    assert cm.value("b") == Fraction(3)


def test_known_objects_check():
    parse_cost("mode max\nvalue a 1\n", known_objects={"a"})
    with pytest.raises(UnknownSymbol):
        parse_cost("mode max\nvalue zz 1\n", known_objects={"a"})


def test_errors():
    with pytest.raises(ParseError):
        parse_cost("value a 1\n")  # missing mode
    with pytest.raises(ParseError):
        parse_cost("mode blended\n")
    with pytest.raises(ParseError):
        parse_cost("mode max\nvalue a one\n")
    with pytest.raises(ParseError):
        parse_cost("mode max\nvalue a -1\n")
    with pytest.raises(ParseError):
        parse_cost("mode max\nvalue a 1\nvalue a 2\n")
    with pytest.raises(ParseError):
        parse_cost("mode additive\nmode max\n")
