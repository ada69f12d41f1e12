# -*- coding: utf-8 -*-
import sys

#: Exit codes of the command line contract.
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3
EXIT_NUMERIC = 4


class NashlibError(Exception):
    exit_code = EXIT_PRECONDITION

    def __init__(self, *args, **kwargs):
        self.message = self.get_message(*args, **kwargs)
        super(NashlibError, self).__init__(self.message)

    @classmethod
    def get_message(cls, *args, **kwargs):
        if args:
            return " ".join(str(arg) for arg in args)
        return cls.__name__

    def show(self):
        print(self.message, file=sys.stderr, flush=True)


# -- graph -------------------------------------------------------------------


class GraphError(NashlibError):
    exit_code = EXIT_CONFIG


class SelfLoop(GraphError):
    @classmethod
    def get_message(cls, node):
        return "Self loops are not allowed: edge ({0} -> {0})".format(node)


class DuplicateEdge(GraphError):
    @classmethod
    def get_message(cls, source, target):
        return "Duplicate edge: ({0} -> {1}) listed more than once".format(
            source, target
        )


class IndexOutOfRange(GraphError):
    @classmethod
    def get_message(cls, index, n):
        return "Node index {0} is outside 1..{1}".format(index, n)


class NonpositiveWeight(GraphError):
    @classmethod
    def get_message(cls, source, target, weight):
        return "Edge ({0} -> {1}) has nonpositive weight {2!r}".format(
            source, target, weight
        )


class NotHurwitz(GraphError):
    exit_code = EXIT_PRECONDITION

    def __init__(self, margin):
        self.margin = margin
        super(NotHurwitz, self).__init__(margin)

    @classmethod
    def get_message(cls, margin):
        return (
            "Coupling matrix is not Hurwitz: min Re(eig(H)) = {0:.3e}; the graph "
            "must be strongly connected with at least one injected edge".format(margin)
        )


# -- game --------------------------------------------------------------------


class GameError(NashlibError):
    pass


class NotAffine(GameError):
    @classmethod
    def get_message(cls, residual):
        return "Pseudo-gradient is not affine: residual {0:.3e}".format(residual)


class SingularSystem(GameError):
    @classmethod
    def get_message(cls, detail=""):
        message = "Stationarity system M x = -b is singular"
        if detail:
            message = "{0}: {1}".format(message, detail)
        return message


class NoConvergence(GameError):
    @classmethod
    def get_message(cls, iterations, residual):
        return "No convergence after {0} iterations (residual {1:.3e})".format(
            iterations, residual
        )


class NonPositiveBeta(GameError):
    @classmethod
    def get_message(cls, gamma3):
        return (
            "Seek-oriented pseudo-gradient is not strongly monotone "
            "(gamma3 = {0:.3e}); check seek_sign".format(gamma3)
        )


# -- schedule ----------------------------------------------------------------


class ScheduleError(NashlibError):
    exit_code = EXIT_CONFIG


class BadRatio(ScheduleError):
    @classmethod
    def get_message(cls, ratio):
        return "Ratio must lie strictly between 0 and 1, got {0!r}".format(ratio)


class Unsorted(ScheduleError):
    @classmethod
    def get_message(cls, index):
        return "Communication windows are not sorted at window {0}".format(index)


class Overlapping(ScheduleError):
    @classmethod
    def get_message(cls, first, second):
        return "Communication windows overlap: {0} and {1}".format(first, second)


class EmptyInterval(ScheduleError):
    @classmethod
    def get_message(cls, window):
        return "Communication window {0} has no positive width".format(window)


class EmptySchedule(ScheduleError):
    @classmethod
    def get_message(cls, what="statistics"):
        return "Schedule has no communication windows; {0} undefined".format(what)


class BadRange(ScheduleError):
    @classmethod
    def get_message(cls, a, b, horizon):
        return "Range [{0}, {1}) is not inside [0, {2}]".format(a, b, horizon)


class OutOfHorizon(ScheduleError):
    @classmethod
    def get_message(cls, t, horizon):
        return "Time {0!r} is outside the schedule horizon [0, {1})".format(t, horizon)


# -- dynamics ----------------------------------------------------------------


class SimulationError(NashlibError):
    exit_code = EXIT_NUMERIC


class DimensionMismatch(SimulationError):
    exit_code = EXIT_CONFIG

    @classmethod
    def get_message(cls, what, expected, got):
        return "{0}: expected dimension {1}, got {2}".format(what, expected, got)


class StepTooLarge(SimulationError):
    exit_code = EXIT_CONFIG

    @classmethod
    def get_message(cls, dt, width):
        return (
            "Step dt={0!r} exceeds the smallest communication window width "
            "{1!r}".format(dt, width)
        )


class NonFiniteState(SimulationError):
    def __init__(self, time):
        self.time = time
        super(NonFiniteState, self).__init__(time)

    @classmethod
    def get_message(cls, time):
        return "Non-finite state encountered at t = {0!r}".format(time)


# -- analysis ----------------------------------------------------------------


class AnalysisError(NashlibError):
    pass


class EpsilonTooLarge(AnalysisError):
    @classmethod
    def get_message(cls, epsilon, eps_star):
        return "epsilon = {0!r} is not below eps* = {1!r}".format(epsilon, eps_star)


class NonPositiveValues(AnalysisError):
    @classmethod
    def get_message(cls, count):
        return "Cannot fit a rate: {0} nonpositive values in the window".format(count)


# -- configuration -----------------------------------------------------------


class ConfigError(NashlibError):
    exit_code = EXIT_CONFIG


class MissingParameter(ConfigError):
    @classmethod
    def get_message(cls, param):
        return "Missing Parameter: %s" % param


class ConfigValidationError(ConfigError):
    def __init__(self, errors):
        self.errors = errors
        super(ConfigValidationError, self).__init__(errors)

    @classmethod
    def get_message(cls, errors):
        lines = ["Invalid experiment config:"]
        for key, detail in sorted(errors.items()):
            lines.append("  {0}: {1}".format(key, detail))
        return "\n".join(lines)


class ConfigNotFound(FileNotFoundError):
    exit_code = EXIT_CONFIG

    def __init__(self, path):
        self.filename = path
        self.message = "Config file not found: {0}".format(path)
        super(ConfigNotFound, self).__init__(self.message)

    def show(self):
        print(self.message, file=sys.stderr, flush=True)
