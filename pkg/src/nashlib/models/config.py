import copy
import logging
import os

import attr
import cerberus

from ..environment import MYPY_RUNNING, NASHLIB_OUTPUT_DIR
from ..exceptions import ConfigError, ConfigValidationError, MissingParameter
from .analysis import auto_epsilon
from .dynamics import SimConfig, random_initial_state
from .game import game_from_config
from .graph import DirectedGraph
from .project import ConfigFile
from .schedule import schedule_from_config

if MYPY_RUNNING:
    from typing import Any, Dict, List, Optional, Tuple

    from .game import GameModel
    from .graph import DirectedGraph as DirectedGraphType
    from .schedule import Schedule


logger = logging.getLogger(__name__)

_NUMBER = {"type": "number"}
_NUMBER_LIST = {"type": "list", "schema": _NUMBER}
_RATIO = {"type": "number", "min": 0.0, "max": 1.0}

EXPERIMENT_SCHEMA = {
    "name": {"type": "string"},
    "game": {
        "type": "dict",
        "required": True,
        "schema": {
            "kind": {
                "type": "string",
                "required": True,
                "allowed": ["energy", "connectivity", "affine", "quadratic"],
            },
            "xq": _NUMBER_LIST,
            "r1": _NUMBER,
            "r2": _NUMBER,
            "neighbors": {
                "type": "dict",
                "keysrules": {"type": "string", "regex": "[0-9]+"},
                "valuesrules": {"type": "list", "schema": {"type": "integer", "min": 1}},
            },
            "M": {"type": "list", "schema": _NUMBER_LIST},
            "b": _NUMBER_LIST,
            "dims": {"type": "list", "schema": {"type": "integer", "min": 1}},
            "seek_sign": {"type": "list", "schema": {"type": "integer", "allowed": [-1, 1]}},
            "c": _NUMBER_LIST,
        },
        "kind_requires": {"affine": ["M", "b", "dims"], "quadratic": ["c"]},
    },
    "graph": {
        "type": "dict",
        "schema": {
            "n": {"type": "integer", "required": True, "min": 2},
            "edges": {
                "type": "list",
                "required": True,
                "schema": {
                    "type": "list",
                    "items": [{"type": "integer"}, {"type": "integer"}, _NUMBER],
                },
            },
        },
    },
    "schedule": {
        "type": "dict",
        "schema": {
            "kind": {
                "type": "string",
                "required": True,
                "allowed": ["periodic", "intervals", "continuous"],
            },
            "T": {"type": "number", "min": 0.0},
            "theta": _NUMBER,
            "windows": {
                "type": "list",
                "schema": {"type": "list", "items": [_NUMBER, _NUMBER]},
            },
            "repeat_every": {"type": "number", "min": 0.0},
        },
        "kind_requires": {"periodic": ["T", "theta"]},
    },
    "sim": {
        "type": "dict",
        "schema": {
            "epsilon": {
                "anyof": [
                    {"type": "number", "min": 0.0},
                    {"type": "string", "allowed": ["auto"]},
                ]
            },
            "kbar": _NUMBER_LIST,
            "dt": {"type": "number", "required": True, "min": 0.0},
            "t_end": {"type": "number", "required": True, "min": 0.0},
            "x0": _NUMBER_LIST,
            "y0": _NUMBER_LIST,
            "seed": {"type": "integer", "nullable": True},
            "init_range": {"type": "list", "items": [_NUMBER, _NUMBER]},
        },
    },
    "analysis": {
        "type": "dict",
        "schema": {
            "lyapunov": {"type": "boolean"},
            "conditions": {"type": "boolean"},
            "rate_fit": {"type": "boolean"},
            "rate_window": {"type": "list", "items": [_NUMBER, _NUMBER]},
            "theta": _RATIO,
            "theta_tilde": _RATIO,
            "vartheta": _RATIO,
            "zeta_bar": _RATIO,
            "mode": {"type": "string", "allowed": ["from-zero", "all-pairs"]},
            "q_scale": {"type": "number", "min": 0.0},
            "diagonal_p": {"type": "boolean"},
            "compare_mu2": {"type": "boolean"},
        },
    },
    "output": {
        "type": "dict",
        "schema": {
            "dir": {"type": "string"},
            "csv": {"type": "string"},
            "summary": {"type": "string"},
        },
    },
    "reference": {
        "type": "dict",
        "schema": {
            "min_width": _NUMBER,
            "mean_width": _NUMBER,
            "max_width": _NUMBER,
            "theta_bar": _NUMBER,
            "T_bar": _NUMBER,
            "x_star": _NUMBER_LIST,
            "note": {"type": "string"},
        },
    },
}

ANALYSIS_DEFAULTS = {
    "lyapunov": True,
    "conditions": True,
    "rate_fit": True,
    "theta": 0.5,
    "mode": "from-zero",
    "q_scale": 1.0,
    "diagonal_p": False,
    "compare_mu2": False,
}
OUTPUT_DEFAULTS = {"csv": "trajectory.csv", "summary": "summary.json"}


class ExperimentValidator(cerberus.Validator):
    def _validate_kind_requires(self, kind_requires, field, value):
        """Fields a mapping must carry for its ``kind``.

        The rule's arguments are validated against this schema:
        {'type': 'dict'}
        """
        if not isinstance(value, dict):
            return
        kind = value.get("kind")
        for key in kind_requires.get(kind, ()):
            if key not in value:
                self._error(field, "'{0}' is required for kind '{1}'".format(key, kind))


def validate(data):
    # type: (Dict[str, Any]) -> Dict[str, Any]
    """
    :raises ConfigValidationError: with the validator's error tree
    """
    validator = ExperimentValidator(EXPERIMENT_SCHEMA, allow_unknown=False)
    if not validator.validate(data):
        raise ConfigValidationError(validator.errors)
    return validator.document


@attr.s(frozen=True)
class ExperimentConfig(object):
    """A validated experiment description."""

    game = attr.ib()  # type: Dict[str, Any]
    name = attr.ib(default="experiment")  # type: str
    graph = attr.ib(default=attr.Factory(dict))  # type: Dict[str, Any]
    schedule = attr.ib(default=attr.Factory(dict))  # type: Dict[str, Any]
    sim = attr.ib(default=attr.Factory(dict))  # type: Dict[str, Any]
    analysis = attr.ib(default=attr.Factory(dict))  # type: Dict[str, Any]
    output = attr.ib(default=attr.Factory(dict))  # type: Dict[str, Any]
    reference = attr.ib(default=attr.Factory(dict))  # type: Dict[str, Any]
    location = attr.ib(default=None, eq=False)  # type: Optional[str]

    @classmethod
    def from_dict(cls, data, location=None):
        # type: (Dict[str, Any], Optional[str]) -> ExperimentConfig
        document = validate(copy.deepcopy(data))
        analysis = dict(ANALYSIS_DEFAULTS)
        analysis.update(document.get("analysis", {}))
        output = dict(OUTPUT_DEFAULTS)
        output.update(document.get("output", {}))
        return cls(
            name=document.get("name", "experiment"),
            game=document["game"],
            graph=document.get("graph", {}),
            schedule=document.get("schedule", {}),
            sim=document.get("sim", {}),
            analysis=analysis,
            output=output,
            reference=document.get("reference", {}),
            location=location,
        )

    @classmethod
    def load(cls, location):
        # type: (str) -> ExperimentConfig
        return cls.from_dict(ConfigFile.read(location).data, location=location)

    def require(self, section):
        # type: (str) -> Dict[str, Any]
        value = getattr(self, section)
        if not value:
            raise MissingParameter(section)
        return value

    @property
    def t_end(self):
        # type: () -> float
        return float(self.require("sim")["t_end"])

    @property
    def output_dir(self):
        # type: () -> str
        return self.output.get("dir") or os.path.join(NASHLIB_OUTPUT_DIR, self.name)

    def build_game(self):
        # type: () -> GameModel
        return game_from_config(self.game)

    def build_graph(self):
        # type: () -> DirectedGraphType
        return DirectedGraph.from_config(self.require("graph"))

    def build_schedule(self):
        # type: () -> Schedule
        return schedule_from_config(self.require("schedule"), self.t_end)

    def gains(self, game, graph):
        # type: (GameModel, DirectedGraphType) -> Tuple[float, str, List[float]]
        """``(epsilon, source, kbar)``; ``epsilon = "auto"`` (the default) uses
        ``0.9 * eps*``, falling back to ``0.1``."""
        sim = self.sim
        kbar = [float(k) for k in sim.get("kbar") or [1.0] * game.n]
        epsilon = sim.get("epsilon", "auto")
        if epsilon != "auto":
            return float(epsilon), "override", kbar
        analysis = self.analysis
        epsilon, source = auto_epsilon(
            game,
            graph,
            kbar,
            q_scale=analysis.get("q_scale", 1.0),
            diagonal=analysis.get("diagonal_p", False),
        )
        return epsilon, source, kbar

    def sim_config(self, game, graph, seed=None):
        # type: (GameModel, DirectedGraphType, Optional[int]) -> SimConfig
        """Resolve the gains and the initial state. A missing ``x0`` or ``y0`` is
        drawn uniformly from ``init_range`` with ``seed``.

        :raises MissingParameter: if neither ``x0`` nor a seed is given
        """
        sim = self.require("sim")
        seed = sim.get("seed") if seed is None else seed
        x0, y0 = sim.get("x0"), sim.get("y0")
        if x0 is None and seed is None:
            raise MissingParameter("sim.x0 (or sim.seed)")
        if seed is not None and (x0 is None or y0 is None):
            low, high = sim.get("init_range", (-15.0, 15.0))
            drawn_x0, drawn_y0 = random_initial_state(game, seed, low, high)
            x0 = drawn_x0 if x0 is None else x0
            y0 = drawn_y0 if y0 is None else y0
        epsilon, source, kbar = self.gains(game, graph)
        try:
            return SimConfig(
                epsilon=epsilon,
                kbar=kbar,
                dt=sim["dt"],
                t_end=sim["t_end"],
                x0=x0,
                y0=y0,
                seed=seed,
                epsilon_source=source,
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError("Invalid sim parameters: %s" % exc)

    def as_dict(self):
        # type: () -> Dict[str, Any]
        data = attr.asdict(self, filter=lambda a, v: a.name != "location")
        return copy.deepcopy(data)
