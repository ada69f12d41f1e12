# -*- coding=utf-8 -*-

import os
import pathlib

import pytest

from nashlib.models.config import ExperimentConfig
from nashlib.models.game import connectivity_game, energy_game
from nashlib.models.graph import DirectedGraph
from nashlib.models.schedule import ACR_WINDOWS, AIC_WINDOWS, from_intervals, periodic

CURRENT_FILE = pathlib.Path(__file__).absolute()
PACKAGE_FIXTURES = CURRENT_FILE.parent.parent.joinpath("src", "nashlib", "fixtures")


def should_skip_slow():
    return os.environ.get("NASHLIB_SKIP_SLOW_TESTS", None) is not None


SKIP_SLOW = should_skip_slow()


def pytest_runtest_setup(item):
    if item.get_closest_marker("slow") is not None and SKIP_SLOW:
        pytest.skip("slow test, skipping...")


@pytest.fixture(scope="session")
def fixture_dir():
    return PACKAGE_FIXTURES


@pytest.fixture(scope="session")
def load_config(fixture_dir):
    def _load(name):
        return ExperimentConfig.load(fixture_dir.joinpath("%s.json" % name).as_posix())

    return _load


@pytest.fixture(scope="session")
def energy():
    return energy_game()


@pytest.fixture(scope="session")
def connectivity():
    return connectivity_game()


@pytest.fixture(scope="session")
def cycle_graph():
    return DirectedGraph.five_cycle()


@pytest.fixture(scope="session")
def acr_schedule():
    return from_intervals(ACR_WINDOWS, 95.0)


@pytest.fixture(scope="session")
def aic_schedule():
    return from_intervals(AIC_WINDOWS, 100.0)


@pytest.fixture(scope="session")
def pic_schedule():
    return periodic(10.0, 0.5, 100.0)


@pytest.fixture
def out_dir(tmp_path):
    path = tmp_path / "out"
    path.mkdir()
    return path
