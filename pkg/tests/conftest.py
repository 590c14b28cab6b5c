"""Shared fixtures: the bundled calibration task is expensive enough to ground once."""

import pytest

from dae.harness import build_mini_zeno, mini_zeno_cost
from dae.stations import build_station_space


@pytest.fixture(scope="session")
def mini():
    return build_mini_zeno()


@pytest.fixture(scope="session")
def task(mini):
    return mini[0]


@pytest.fixture(scope="session")
def inv(mini):
    return mini[1]


@pytest.fixture(scope="session")
def space(task, inv):
    return build_station_space(task, inv)


@pytest.fixture(scope="session")
def cost_add():
    return mini_zeno_cost("additive")


@pytest.fixture(scope="session")
def cost_max():
    return mini_zeno_cost("max")
