# -*- coding=utf-8 -*-
import json

import pytest

from nashlib.exceptions import (
    ConfigError,
    ConfigNotFound,
    ConfigValidationError,
    MissingParameter,
)
from nashlib.models.analysis import EPSILON_FALLBACK
from nashlib.models.config import ANALYSIS_DEFAULTS, ExperimentConfig, validate
from nashlib.models.project import ConfigFile, write_json

ENERGY_TOML = """
name = "energy_toml"

[game]
kind = "energy"
xq = [10, 15, 20, 25, 30]

[graph]
n = 5
edges = [[1, 5, 1.0], [5, 4, 1.0], [4, 3, 1.0], [3, 2, 1.0], [2, 1, 1.0]]

[schedule]
kind = "periodic"
T = 10
theta = 0.5

[sim]
epsilon = 0.02
dt = 0.01
t_end = 50
x0 = [21, 5, 1, 13, 16]
"""


def test_all_fixtures_validate(fixture_dir):
    paths = sorted(fixture_dir.glob("*.json"))
    assert len(paths) == 9
    for path in paths:
        config = ExperimentConfig.load(path.as_posix())
        assert config.name == path.stem
        assert config.build_game().n == 5


def test_toml_config(tmp_path):
    path = tmp_path / "energy.toml"
    path.write_text(ENERGY_TOML)
    config = ExperimentConfig.load(path.as_posix())
    assert config.name == "energy_toml"
    assert config.t_end == 50.0
    assert config.build_schedule().ratio == 0.5
    assert config.build_graph().n == 5
    assert config.analysis == ANALYSIS_DEFAULTS


def test_config_file_round_trip(tmp_path):
    path = (tmp_path / "nested" / "result.json").as_posix()
    write_json(path, {"b": [1.0, float("inf")], "a": 1})
    loaded = ConfigFile.read(path)
    assert loaded.data == {"a": 1, "b": [1.0, "inf"]}
    assert loaded.line_ending == "\n"


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigNotFound):
        ConfigFile.read((tmp_path / "missing.json").as_posix())
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigError):
        ConfigFile.read(broken.as_posix())
    listing = tmp_path / "listing.json"
    listing.write_text(json.dumps([1, 2]))
    with pytest.raises(ConfigError):
        ConfigFile.read(listing.as_posix())
    bad_toml = tmp_path / "bad.toml"
    bad_toml.write_text("[game\nkind = ")
    with pytest.raises(ConfigError):
        ConfigFile.read(bad_toml.as_posix())


@pytest.mark.parametrize(
    "data, field",
    [
        ({}, "game"),
        ({"game": {"kind": "chess"}}, "game"),
        ({"game": {"kind": "energy"}, "sim": {"dt": 0.1}}, "sim"),
        ({"game": {"kind": "energy"}, "analysis": {"theta": 1.5}}, "analysis"),
        ({"game": {"kind": "energy"}, "extra": 1}, "extra"),
        ({"game": {"kind": "energy"}, "sim": {"dt": 0.1, "t_end": 1, "epsilon": "big"}}, "sim"),
        ({"game": {"kind": "quadratic"}}, "game"),
        ({"game": {"kind": "energy"}, "schedule": {"kind": "periodic", "theta": 0.5}}, "schedule"),
    ],
)
def test_validation_errors(data, field):
    with pytest.raises(ConfigValidationError) as excinfo:
        validate(data)
    assert field in excinfo.value.errors
    assert field in excinfo.value.message


def test_validation_requires_fields_per_kind():
    with pytest.raises(ConfigValidationError) as excinfo:
        validate({"game": {"kind": "affine", "b": [0.0], "dims": [1]}})
    assert "'M' is required for kind 'affine'" in str(excinfo.value.errors["game"])
    # intervals may be empty; continuous needs nothing
    validate({"game": {"kind": "energy"}, "schedule": {"kind": "intervals"}})
    validate({"game": {"kind": "energy"}, "schedule": {"kind": "continuous"}})


def test_require_missing_section():
    config = ExperimentConfig.from_dict({"game": {"kind": "energy"}})
    with pytest.raises(MissingParameter):
        config.build_graph()
    with pytest.raises(MissingParameter):
        config.t_end


def test_sim_config_requires_initial_state(load_config):
    data = load_config("energy_pic").as_dict()
    del data["sim"]["x0"]
    config = ExperimentConfig.from_dict(data)
    game, graph = config.build_game(), config.build_graph()
    with pytest.raises(MissingParameter):
        config.sim_config(game, graph)
    assert config.sim_config(game, graph, seed=1).seed == 1


def test_sim_config_wraps_bad_values(load_config):
    data = load_config("energy_pic").as_dict()
    data["sim"]["dt"] = 0.0
    config = ExperimentConfig.from_dict(data)
    with pytest.raises(ConfigError):
        config.sim_config(config.build_game(), config.build_graph())


def test_auto_epsilon_gains(load_config):
    data = load_config("energy_pic").as_dict()
    data["sim"]["epsilon"] = "auto"
    config = ExperimentConfig.from_dict(data)
    game, graph = config.build_game(), config.build_graph()
    epsilon, source, kbar = config.gains(game, graph)
    assert source == "computed"
    assert 0.0 < epsilon < 1.0
    assert kbar == [1.0] * 5


def test_auto_epsilon_fallback():
    config = ExperimentConfig.from_dict(
        {
            "game": {"kind": "affine", "M": [[1, 0], [0, 1]], "b": [0, 0], "dims": [1, 1]},
            "graph": {"n": 2, "edges": [[1, 2, 1.0], [2, 1, 1.0]]},
            "sim": {"dt": 0.1, "t_end": 1, "x0": [0, 0]},
        }
    )
    epsilon, source, _ = config.gains(config.build_game(), config.build_graph())
    assert (epsilon, source) == (EPSILON_FALLBACK, "fallback")


def test_as_dict_round_trips(load_config):
    config = load_config("connectivity_acr")
    assert ExperimentConfig.from_dict(config.as_dict()) == config


def test_output_dir_default(load_config):
    config = load_config("energy_pic")
    assert config.output_dir.endswith("energy_pic")
    assert config.output["csv"] == "trajectory.csv"
