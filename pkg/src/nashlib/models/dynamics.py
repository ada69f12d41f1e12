import csv
import logging

import attr
import numpy as np
from cached_property import cached_property
from vistir.contextmanagers import atomic_open_for_write

from ..environment import MYPY_RUNNING
from ..exceptions import DimensionMismatch, NonFiniteState, ScheduleError, StepTooLarge
from ..utils import as_vector, format_float
from .graph import coupling_matrices, is_strongly_connected
from .utils import frozen_array, is_positive

if MYPY_RUNNING:
    from typing import Any, Dict, List, Optional, Sequence, Tuple

    from .game import GameModel
    from .graph import CouplingMatrices, DirectedGraph
    from .schedule import Schedule


logger = logging.getLogger(__name__)

#: Tolerance (relative to ``dt``) under which a leftover step is absorbed.
_STEP_SLACK = 1e-9


def _optional_vector(value):
    return None if value is None else frozen_array(value)


@attr.s(frozen=True)
class SimConfig(object):
    """Integration parameters. The player gains are ``k_i = epsilon * kbar_i``."""

    epsilon = attr.ib(converter=float, validator=is_positive)  # type: float
    kbar = attr.ib(converter=lambda k: tuple(float(v) for v in k))  # type: Tuple[float, ...]
    dt = attr.ib(converter=float, validator=is_positive)  # type: float
    t_end = attr.ib(converter=float, validator=is_positive)  # type: float
    x0 = attr.ib(converter=frozen_array, eq=False)  # type: np.ndarray
    y0 = attr.ib(default=None, converter=_optional_vector, eq=False)  # type: Optional[np.ndarray]
    seed = attr.ib(default=None)  # type: Optional[int]
    epsilon_source = attr.ib(default="override")  # type: str

    @kbar.validator
    def _check_kbar(self, attribute, value):
        if not value or min(value) <= 0 or not np.all(np.isfinite(value)):
            raise ValueError("kbar must hold positive finite gains, got %r" % (value,))

    @property
    def kbar_max(self):
        # type: () -> float
        return max(self.kbar)

    def as_dict(self):
        # type: () -> Dict[str, Any]
        return {
            "epsilon": self.epsilon,
            "epsilon_source": self.epsilon_source,
            "kbar": list(self.kbar),
            "dt": self.dt,
            "t_end": self.t_end,
            "x0": self.x0.tolist(),
            "y0": None if self.y0 is None else self.y0.tolist(),
            "seed": self.seed,
        }


@attr.s(frozen=True, eq=False)
class SeekingDynamics(object):
    """Right-hand side of the coupled action/estimate system."""

    game = attr.ib()  # type: GameModel
    matrices = attr.ib()  # type: CouplingMatrices
    gains = attr.ib(converter=frozen_array)  # type: np.ndarray

    @classmethod
    def build(cls, game, graph, epsilon=1.0, kbar=None):
        # type: (GameModel, DirectedGraph, float, Optional[Sequence[float]]) -> SeekingDynamics
        if graph.n != game.n:
            raise DimensionMismatch("graph size", game.n, graph.n)
        kbar = np.ones(game.n) if kbar is None else as_vector(kbar, game.n, "kbar")
        gains = game.sign_vector * float(epsilon) * np.repeat(kbar, game.dims)
        return cls(game=game, matrices=coupling_matrices(graph, game.dims), gains=gains)

    @cached_property
    def zero_stack(self):
        # type: () -> np.ndarray
        return np.zeros(self.matrices.stack_dim)

    def derivative(self, communicating, x, y):
        # type: (bool, np.ndarray, np.ndarray) -> Tuple[np.ndarray, np.ndarray]
        dx = self.gains * self.game.estimate_gradient(y)
        if communicating:
            dy = self.matrices.estimate_rhs(y, x)
        else:
            dy = self.zero_stack
        return dx, dy

    def step(self, communicating, x, y, h):
        # type: (bool, np.ndarray, np.ndarray, float) -> Tuple[np.ndarray, np.ndarray]
        """One classical fourth-order Runge-Kutta step of size ``h``."""
        k1x, k1y = self.derivative(communicating, x, y)
        k2x, k2y = self.derivative(communicating, x + 0.5 * h * k1x, y + 0.5 * h * k1y)
        k3x, k3y = self.derivative(communicating, x + 0.5 * h * k2x, y + 0.5 * h * k2y)
        k4x, k4y = self.derivative(communicating, x + h * k3x, y + h * k3y)
        x_next = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        if communicating:
            y_next = y + (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        else:
            y_next = y
        return x_next, y_next


def derivative(game, graph, communicating, x, y, epsilon=1.0, kbar=None):
    # type: (GameModel, DirectedGraph, bool, Sequence[float], Sequence[float], float, Optional[Sequence[float]]) -> Tuple[np.ndarray, np.ndarray]
    """``(dx, dy)`` at state ``(x, y)``.

    ``dx_i = sigma_i * epsilon * kbar_i * df_i/dx_i(y_i)``; while communicating
    ``dy = -H y + B (1 (x) x)``, otherwise ``dy = 0``.

    :raises DimensionMismatch: if ``x`` or ``y`` has the wrong length
    """
    dynamics = SeekingDynamics.build(game, graph, epsilon, kbar)
    x = as_vector(x, game.total_dim, "x")
    y = as_vector(y, dynamics.matrices.stack_dim, "y")
    return dynamics.derivative(communicating, x, y)


@attr.s(frozen=True, eq=False)
class Trajectory(object):
    times = attr.ib(converter=frozen_array)  # type: np.ndarray
    x_samples = attr.ib(converter=lambda v: frozen_array(v, ndim=2))  # type: np.ndarray
    y_samples = attr.ib(converter=lambda v: frozen_array(v, ndim=2))  # type: np.ndarray
    comm_flags = attr.ib(converter=lambda v: np.asarray(v, dtype=bool))  # type: np.ndarray

    @property
    def n_players(self):
        # type: () -> int
        return self.y_samples.shape[1] // self.x_samples.shape[1]

    @property
    def final_x(self):
        # type: () -> np.ndarray
        return self.x_samples[-1]

    def consensus_stack(self, x=None):
        # type: (Optional[np.ndarray]) -> np.ndarray
        """``1 (x) x`` for each sample, or for a single ``x`` if given."""
        if x is not None:
            return np.tile(x, self.n_players)
        return np.tile(self.x_samples, (1, self.n_players))

    def silent_spans(self):
        # type: () -> List[Tuple[int, int]]
        """Inclusive sample-index ranges over which the estimates are frozen.

        A span starts at the sample where communication stops and ends at the
        sample where it resumes (or the last sample).
        """
        spans = []
        flags = self.comm_flags
        index, count = 0, flags.shape[0]
        while index < count - 1:
            if flags[index]:
                index += 1
                continue
            start = index
            while index < count - 1 and not flags[index]:
                index += 1
            spans.append((start, index))
        return spans

    def write_csv(self, path, extra=None):
        # type: (str, Optional[Dict[str, np.ndarray]]) -> None
        """Write ``t,comm,x_1..x_D,y_1..y_{nD}`` rows (plus ``extra`` columns).

        ``y_k`` is player ``(k - 1) // D + 1``'s estimate of coordinate
        ``(k - 1) % D + 1``.
        """
        extra = extra or {}
        dim, stack = self.x_samples.shape[1], self.y_samples.shape[1]
        header = (
            ["t", "comm"]
            + ["x_%d" % (k + 1) for k in range(dim)]
            + ["y_%d" % (k + 1) for k in range(stack)]
            + list(extra)
        )
        columns = list(extra.values())
        with atomic_open_for_write(path, newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row, t in enumerate(self.times):
                writer.writerow(
                    [format_float(t), int(self.comm_flags[row])]
                    + [format_float(v) for v in self.x_samples[row]]
                    + [format_float(v) for v in self.y_samples[row]]
                    + [format_float(col[row]) for col in columns]
                )
        logger.info("Wrote %d samples to %s", self.times.shape[0], path)


def _segments(schedule, t_end):
    # type: (Schedule, float) -> List[Tuple[float, float, bool]]
    points = [p for p in schedule.breakpoints.tolist() if p < t_end] + [t_end]
    segments = []
    for start, end in zip(points[:-1], points[1:]):
        index = int(np.searchsorted(schedule.starts, start, side="right")) - 1
        communicating = index >= 0 and start < schedule.ends[index]
        segments.append((start, end, bool(communicating)))
    return segments


def _check_step(schedule, cfg):
    # type: (Schedule, SimConfig) -> None
    if schedule.horizon < cfg.t_end:
        raise ScheduleError(
            "Schedule horizon %r is shorter than t_end %r" % (schedule.horizon, cfg.t_end)
        )
    widths = [min(e, cfg.t_end) - s for s, e in schedule.intervals if s < cfg.t_end]
    if widths and cfg.dt > min(widths):
        raise StepTooLarge(cfg.dt, min(widths))


def simulate(game, graph, schedule, cfg):
    # type: (GameModel, DirectedGraph, Schedule, SimConfig) -> Trajectory
    """Integrate the seeking dynamics over ``[0, cfg.t_end]``.

    Steps have size ``cfg.dt`` except that no step crosses a window boundary;
    every boundary inside the horizon is a sample time.

    :raises StepTooLarge: if ``dt`` exceeds the narrowest window
    :raises NonFiniteState: if the state overflows
    """
    _check_step(schedule, cfg)
    if len(cfg.kbar) != game.n:
        raise DimensionMismatch("kbar", game.n, len(cfg.kbar))
    if not is_strongly_connected(graph):
        logger.warning(
            "Communication graph is not strongly connected; estimates may not converge"
        )
    dynamics = SeekingDynamics.build(game, graph, cfg.epsilon, cfg.kbar)
    x = as_vector(cfg.x0, game.total_dim, "x0").copy()
    stack_dim = dynamics.matrices.stack_dim
    y = np.zeros(stack_dim) if cfg.y0 is None else as_vector(cfg.y0, stack_dim, "y0").copy()

    times, xs, ys, flags = [0.0], [x], [y], []
    dt = cfg.dt
    with np.errstate(over="ignore", invalid="ignore"):
        for start, end, communicating in _segments(schedule, cfg.t_end):
            length = end - start
            full = int(np.floor(length / dt + _STEP_SLACK))
            grid = [start + k * dt for k in range(1, full + 1)]
            if not grid or end - grid[-1] > _STEP_SLACK * dt:
                grid.append(end)
            else:
                grid[-1] = end
            t = start
            for t_next in grid:
                x, y = dynamics.step(communicating, x, y, t_next - t)
                if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
                    raise NonFiniteState(t_next)
                flags.append(communicating)
                times.append(t_next)
                xs.append(x)
                ys.append(y)
                t = t_next
    # the final sample inherits the flag of the step that produced it
    flags.append(flags[-1] if flags else False)
    logger.debug("Integrated %d steps to t = %s", len(times) - 1, cfg.t_end)
    return Trajectory(
        times=np.array(times),
        x_samples=np.array(xs),
        y_samples=np.array(ys),
        comm_flags=np.array(flags),
    )


def error_traces(traj, x_star):
    # type: (Trajectory, Sequence[float]) -> Tuple[np.ndarray, np.ndarray]
    """``|x - x*|`` and ``|y - 1 (x) x|`` per sample.

    :raises DimensionMismatch: if ``x_star`` does not match the action dimension
    """
    x_star = as_vector(x_star, traj.x_samples.shape[1], "x_star")
    e_norms = np.linalg.norm(traj.x_samples - x_star, axis=1)
    ex_norms = np.linalg.norm(traj.y_samples - traj.consensus_stack(), axis=1)
    return e_norms, ex_norms


def random_initial_state(game, seed, low=-15.0, high=15.0):
    # type: (GameModel, int, float, float) -> Tuple[np.ndarray, np.ndarray]
    """Uniform ``(x0, y0)`` on ``[low, high]`` from one seeded stream; ``x0`` is
    drawn first, then the stacked estimates."""
    state = np.random.RandomState(seed)
    x0 = state.uniform(low, high, size=game.total_dim)
    y0 = state.uniform(low, high, size=game.n * game.total_dim)
    return x0, y0


def observed_order(game, graph, schedule, cfg, dts=None):
    # type: (GameModel, DirectedGraph, Schedule, SimConfig, Optional[Sequence[float]]) -> float
    """Estimated convergence order of the integrator from three step sizes
    ``dt, dt/2, dt/4`` (or ``dts``)."""
    dts = list(dts) if dts is not None else [cfg.dt, cfg.dt / 2.0, cfg.dt / 4.0]
    finals = [simulate(game, graph, schedule, attr.evolve(cfg, dt=h)).final_x for h in dts]
    coarse = np.linalg.norm(finals[0] - finals[1])
    fine = np.linalg.norm(finals[1] - finals[2])
    return float(np.log(coarse / fine) / np.log(dts[0] / dts[1]))
