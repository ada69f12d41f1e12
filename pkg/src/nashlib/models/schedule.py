import logging

import attr
import numpy as np
from cached_property import cached_property

from ..environment import MYPY_RUNNING
from ..exceptions import (
    BadRange,
    BadRatio,
    EmptyInterval,
    EmptySchedule,
    MissingParameter,
    OutOfHorizon,
    Overlapping,
    ScheduleError,
    Unsorted,
)

if MYPY_RUNNING:
    from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

    Window = Tuple[float, float]


logger = logging.getLogger(__name__)

PERIODIC = "periodic"
INTERVALS = "intervals"
CONTINUOUS = "continuous"

FROM_ZERO = "from-zero"
ALL_PAIRS = "all-pairs"
ACR_MODES = (FROM_ZERO, ALL_PAIRS)

#: Published communication windows of the two aperiodic experiments.
AIC_WINDOWS = (
    (0.0, 6.0),
    (10.0, 14.0),
    (20.0, 24.5),
    (29.0, 34.5),
    (41.0, 46.0),
    (50.0, 55.5),
    (60.0, 64.5),
    (72.0, 76.0),
    (80.0, 85.5),
    (90.0, 95.5),
)
ACR_WINDOWS = (
    (0.0, 7.0),
    (10.0, 12.0),
    (16.0, 22.0),
    (29.0, 33.5),
    (38.0, 38.5),
    (48.0, 57.9),
    (63.0, 69.0),
    (76.0, 82.0),
    (87.0, 95.0),
)


def _check_ratio(theta):
    # type: (float) -> float
    theta = float(theta)
    if not 0.0 < theta < 1.0:
        raise BadRatio(theta)
    return theta


def _validate_windows(windows, horizon):
    # type: (Sequence[Window], float) -> Tuple[Window, ...]
    checked = []  # type: List[Window]
    for index, window in enumerate(windows):
        start, end = float(window[0]), float(window[1])
        if not end > start:
            raise EmptyInterval((start, end))
        if start < 0.0 or end > horizon:
            raise BadRange(start, end, horizon)
        if checked:
            prev_start, prev_end = checked[-1]
            if start < prev_start:
                raise Unsorted(index)
            if start < prev_end:
                raise Overlapping(checked[-1], (start, end))
        checked.append((start, end))
    return tuple(checked)


@attr.s(frozen=True)
class Schedule(object):
    """Communication windows ``[t_m, s_m)`` on ``[0, horizon)``.

    Players exchange estimates only inside a window; between windows the
    estimates are frozen.
    """

    intervals = attr.ib(converter=tuple)  # type: Tuple[Window, ...]
    horizon = attr.ib(converter=float)  # type: float
    kind = attr.ib(default=INTERVALS)  # type: str
    period = attr.ib(default=None)  # type: Optional[float]
    ratio = attr.ib(default=None)  # type: Optional[float]

    @horizon.validator
    def _check_horizon(self, attribute, value):
        if not (np.isfinite(value) and value > 0):
            raise ScheduleError("horizon must be positive and finite, got %r" % value)

    @cached_property
    def starts(self):
        # type: () -> np.ndarray
        return np.array([w[0] for w in self.intervals], dtype=float)

    @cached_property
    def ends(self):
        # type: () -> np.ndarray
        return np.array([w[1] for w in self.intervals], dtype=float)

    @cached_property
    def widths(self):
        # type: () -> np.ndarray
        return self.ends - self.starts

    @cached_property
    def breakpoints(self):
        # type: () -> np.ndarray
        """Sorted distinct window boundaries together with ``0`` and the horizon."""
        return np.unique(np.concatenate([[0.0, self.horizon], self.starts, self.ends]))

    def __len__(self):
        return len(self.intervals)

    def cumulative(self, t):
        # type: (Any) -> Any
        """``M(t, 0)``, vectorised over ``t``."""
        t = np.asarray(t, dtype=float)
        if not len(self.intervals):
            return np.zeros_like(t) if t.ndim else 0.0
        covered = np.clip(t[..., None] - self.starts, 0.0, self.widths).sum(axis=-1)
        return covered if t.ndim else float(covered)

    def windows_until(self, t):
        # type: (float) -> List[Window]
        """Windows that open before ``t``, the last one clipped at ``t``."""
        return [(start, min(end, t)) for start, end in self.intervals if start < t]

    def repeated(self, every, horizon):
        # type: (float, float) -> Schedule
        """Replicate the windows every ``every`` seconds up to ``horizon``."""
        every = float(every)
        if not every > 0:
            raise ScheduleError("repeat period must be positive, got %r" % every)
        windows = []  # type: List[Window]
        shift = 0.0
        while shift < horizon:
            for start, end in self.intervals:
                if start + shift >= horizon:
                    break
                windows.append((start + shift, min(end + shift, horizon)))
            shift += every
        return from_intervals(windows, horizon)

    def truncated(self, horizon):
        # type: (float) -> Schedule
        windows = [(s, min(e, horizon)) for s, e in self.intervals if s < horizon]
        return attr.evolve(self, intervals=tuple(windows), horizon=horizon)

    def as_config(self):
        # type: () -> Dict[str, Any]
        if self.kind == PERIODIC:
            return {"kind": PERIODIC, "T": self.period, "theta": self.ratio}
        if self.kind == CONTINUOUS:
            return {"kind": CONTINUOUS}
        return {"kind": INTERVALS, "windows": [list(w) for w in self.intervals]}


def periodic(T, theta, horizon):
    # type: (float, float, float) -> Schedule
    """Windows ``[mT, (m + theta)T)`` for ``m = 0, 1, ...`` inside the horizon.

    :raises BadRatio: if ``theta`` is outside ``(0, 1)``
    """
    theta = _check_ratio(theta)
    T, horizon = float(T), float(horizon)
    if not T > 0:
        raise ScheduleError("period T must be positive, got %r" % T)
    windows = []
    count = int(np.ceil(horizon / T)) + 1
    for m in range(count):
        start = m * T
        if start >= horizon:
            break
        windows.append((start, min((m + theta) * T, horizon)))
    return Schedule(
        intervals=tuple(windows), horizon=horizon, kind=PERIODIC, period=T, ratio=theta
    )


def from_intervals(windows, horizon):
    # type: (Iterable[Window], float) -> Schedule
    """
    :raises Unsorted: if window starts decrease
    :raises Overlapping: if a window opens before the previous one closes
    :raises EmptyInterval: for a window without positive width
    """
    horizon = float(horizon)
    return Schedule(intervals=_validate_windows(list(windows), horizon), horizon=horizon)


def continuous(horizon):
    # type: (float) -> Schedule
    """The always-communicating schedule ``[0, horizon)``."""
    return Schedule(intervals=((0.0, float(horizon)),), horizon=horizon, kind=CONTINUOUS)


def _check_range(schedule, a, b):
    # type: (Schedule, float, float) -> None
    if not 0.0 <= a < b <= schedule.horizon:
        raise BadRange(a, b, schedule.horizon)


def comm_width(schedule, a, b):
    # type: (Schedule, float, float) -> float
    """Total communication time on ``[a, b)``."""
    _check_range(schedule, a, b)
    overlap = np.minimum(schedule.ends, b) - np.maximum(schedule.starts, a)
    return float(np.clip(overlap, 0.0, None).sum())


def silent_width(schedule, a, b):
    # type: (Schedule, float, float) -> float
    return (b - a) - comm_width(schedule, a, b)


@attr.s(frozen=True)
class AcrReport(object):
    theta_requested = attr.ib(converter=float)  # type: float
    elastic_slack_found = attr.ib(converter=float)  # type: float
    holds_strict = attr.ib()  # type: bool
    worst_time = attr.ib(converter=float)  # type: float
    worst_start = attr.ib(default=0.0, converter=float)  # type: float
    mode = attr.ib(default=FROM_ZERO)  # type: str

    def as_dict(self):
        # type: () -> Dict[str, Any]
        return attr.asdict(self)


def check_acr(schedule, theta, mode=FROM_ZERO):
    # type: (Schedule, float, str) -> AcrReport
    """Smallest slack ``T0`` with ``M(t, s) >= theta (t - s) - T0``.

    The deficit ``theta * t - M(t, 0)`` is piecewise linear with kinks only at
    window boundaries, so scanning the breakpoints is exact. ``FROM_ZERO``
    fixes ``s = 0``; ``ALL_PAIRS`` takes the largest rise of the deficit over
    any ``s < t``.
    """
    theta = _check_ratio(theta)
    if mode not in ACR_MODES:
        raise ScheduleError("Unknown ACR mode %r; expected one of %s" % (mode, ACR_MODES))
    points = schedule.breakpoints
    deficit = theta * points - schedule.cumulative(points)
    if mode == FROM_ZERO:
        worst = int(np.argmax(deficit))
        slack, start = float(deficit[worst]), 0.0
    else:
        running_min = np.minimum.accumulate(deficit)
        argmins = _running_argmin(deficit)
        rise = deficit - running_min
        worst = int(np.argmax(rise))
        slack, start = float(rise[worst]), float(points[argmins[worst]])
    slack = max(0.0, slack)
    if slack <= 1e-12:
        slack = 0.0
    report = AcrReport(
        theta_requested=theta,
        elastic_slack_found=slack,
        holds_strict=slack == 0.0,
        worst_time=float(points[worst]),
        worst_start=start,
        mode=mode,
    )
    logger.debug("ACR check: %s", report)
    return report


def _running_argmin(values):
    # type: (np.ndarray) -> np.ndarray
    out = np.empty(values.shape[0], dtype=int)
    best = 0
    for index, value in enumerate(values):
        if value < values[best]:
            best = index
        out[index] = best
    return out


@attr.s(frozen=True)
class QuasiPeriodicStats(object):
    inf_width = attr.ib(converter=float)  # type: float
    #: ``None`` when no window has a successor
    sup_period = attr.ib()  # type: Optional[float]
    period_count = attr.ib(converter=int)  # type: int


@attr.s(frozen=True)
class IntervalStats(object):
    min_width = attr.ib(converter=float)  # type: float
    mean_width = attr.ib(converter=float)  # type: float
    max_width = attr.ib(converter=float)  # type: float
    count = attr.ib(converter=int)  # type: int


def quasi_periodic_stats(schedule):
    # type: (Schedule) -> QuasiPeriodicStats
    """Infimum of the window widths and supremum of start-to-start gaps."""
    if not len(schedule):
        raise EmptySchedule("quasi-periodic statistics")
    gaps = np.diff(schedule.starts).tolist()
    return QuasiPeriodicStats(
        inf_width=float(schedule.widths.min()),
        sup_period=max(gaps) if gaps else None,
        period_count=len(gaps),
    )


def interval_stats(schedule):
    # type: (Schedule) -> IntervalStats
    if not len(schedule):
        raise EmptySchedule("interval statistics")
    widths = schedule.widths
    return IntervalStats(
        min_width=widths.min(),
        mean_width=widths.mean(),
        max_width=widths.max(),
        count=widths.shape[0],
    )


def max_silent_ratio(schedule):
    # type: (Schedule) -> float
    """Largest realised ``(t_{m+1} - s_m) / (t_{m+1} - t_m)`` over the windows.

    This is the finite-horizon stand-in for the lim sup of the silent share of
    a cycle; a schedule with a single window has no silent cycle and yields 0.
    """
    if not len(schedule):
        raise EmptySchedule("silent ratio")
    if len(schedule) < 2:
        return 0.0
    starts, ends = schedule.starts, schedule.ends
    silent = starts[1:] - ends[:-1]
    cycle = starts[1:] - starts[:-1]
    return float(np.max(silent / cycle))


def is_communicating(schedule, t):
    # type: (Schedule, float) -> bool
    if not 0.0 <= t < schedule.horizon:
        raise OutOfHorizon(t, schedule.horizon)
    index = int(np.searchsorted(schedule.starts, t, side="right")) - 1
    return bool(index >= 0 and t < schedule.ends[index])


def next_switch(schedule, t):
    # type: (Schedule, float) -> float
    """Smallest window boundary (or the horizon) strictly after ``t``."""
    if not 0.0 <= t < schedule.horizon:
        raise OutOfHorizon(t, schedule.horizon)
    points = schedule.breakpoints
    return float(points[int(np.searchsorted(points, t, side="right"))])


def schedule_from_config(spec, horizon):
    # type: (Dict[str, Any], float) -> Schedule
    """Build a schedule from its config mapping; ``horizon`` is the run's
    ``t_end``."""
    kind = spec.get("kind")
    if kind == PERIODIC:
        missing = [key for key in ("T", "theta") if key not in spec]
        if missing:
            raise MissingParameter("schedule.{0}".format(missing[0]))
        return periodic(spec["T"], spec["theta"], horizon)
    if kind == CONTINUOUS:
        return continuous(horizon)
    if kind == INTERVALS:
        windows = [tuple(w) for w in spec.get("windows", [])]
        every = spec.get("repeat_every")
        if every is not None:
            base_horizon = max([float(every)] + [w[1] for w in windows])
            return from_intervals(windows, base_horizon).repeated(every, horizon)
        last_end = max([horizon] + [float(w[1]) for w in windows])
        schedule = from_intervals(windows, last_end)
        if last_end > horizon:
            logger.info("Clipping communication windows at t_end = %s", horizon)
            schedule = schedule.truncated(horizon)
        return schedule
    raise ScheduleError("Unknown schedule kind: %r" % kind)
