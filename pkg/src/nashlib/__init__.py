import logging
import warnings

from .models.dynamics import SimConfig, Trajectory, simulate
from .models.game import GameModel, connectivity_game, energy_game, solve_nash
from .models.graph import DirectedGraph, build_graph
from .models.schedule import Schedule, from_intervals, periodic

__version__ = "0.1.0.dev0"


logger = logging.getLogger(__name__)
logger.addHandler(logging.NullHandler())
warnings.filterwarnings("ignore", category=ResourceWarning)


__all__ = [
    "DirectedGraph",
    "GameModel",
    "Schedule",
    "SimConfig",
    "Trajectory",
    "build_graph",
    "connectivity_game",
    "energy_game",
    "from_intervals",
    "periodic",
    "simulate",
    "solve_nash",
]
