import logging

import attr
import numpy as np

from ..environment import MYPY_RUNNING
from ..exceptions import (
    AnalysisError,
    BadRatio,
    DimensionMismatch,
    EpsilonTooLarge,
    NonPositiveBeta,
    NonPositiveValues,
)
from ..utils import as_vector, lambda_max, lambda_min
from .dynamics import error_traces
from .game import oriented_jacobian, regularity_constants
from .graph import coupling_matrices, solve_lyapunov_certificate

if MYPY_RUNNING:
    from typing import Any, Dict, List, Optional, Sequence, Tuple

    from .dynamics import Trajectory
    from .game import GameModel, RegularityConstants
    from .graph import DirectedGraph, LyapunovCertificate
    from .schedule import Schedule


logger = logging.getLogger(__name__)

#: Constants of the quadratic action-error function ``0.5 |e|^2``.
GAMMA1 = 0.5
GAMMA2 = 0.5
GAMMA4 = 1.0
#: Domain radius; unused because the quadratic function is valid globally.
GAMMA5 = float("inf")

MU2_CORRECTED = "corrected"
MU2_AS_PRINTED = "as-printed"
MU2_VARIANTS = (MU2_CORRECTED, MU2_AS_PRINTED)

PIC = "PIC"
AIC = "AIC"
MIN_RATIO = "MinRatio"
ACR = "ACR"

#: Samples with ``V`` below this fraction of ``V(0)`` are left out of rate fits.
RATE_FIT_FLOOR = 1e-14
EPSILON_SAFETY = 0.9
EPSILON_FALLBACK = 0.1


@attr.s(frozen=True)
class TheoremConstants(object):
    """Constants entering the convergence conditions at a fixed ``epsilon``."""

    alpha = attr.ib(converter=float)  # type: float
    beta = attr.ib(converter=float)  # type: float
    gamma3 = attr.ib(converter=float)  # type: float
    kbar_max = attr.ib(converter=float)  # type: float
    n = attr.ib(converter=int)  # type: int
    p_norm = attr.ib(converter=float)  # type: float
    p_min = attr.ib(converter=float)  # type: float
    p_max = attr.ib(converter=float)  # type: float
    q_min = attr.ib(converter=float)  # type: float
    pi1 = attr.ib(converter=float)  # type: float
    pi2 = attr.ib(converter=float)  # type: float
    eps1_star = attr.ib(converter=float)  # type: float
    eps2_star = attr.ib(converter=float)  # type: float
    epsilon = attr.ib(converter=float)  # type: float
    eta1 = attr.ib(converter=float)  # type: float
    eta2 = attr.ib(converter=float)  # type: float
    mu2_variant = attr.ib(default=MU2_CORRECTED)  # type: str
    gamma1 = attr.ib(default=GAMMA1)  # type: float
    gamma2 = attr.ib(default=GAMMA2)  # type: float
    gamma4 = attr.ib(default=GAMMA4)  # type: float
    gamma5 = attr.ib(default=GAMMA5)  # type: float
    gamma3_exact = attr.ib(default=True)  # type: bool

    @property
    def eps_star(self):
        # type: () -> float
        return min(self.eps1_star, self.eps2_star)

    @property
    def epsilon_admissible(self):
        # type: () -> bool
        return 0.0 < self.epsilon < self.eps_star

    def gamma1_matrix(self, epsilon=None):
        # type: (Optional[float]) -> np.ndarray
        eps = self.epsilon if epsilon is None else float(epsilon)
        return np.array(
            [
                [eps * self.gamma3, -eps * self.pi1],
                [-eps * self.pi1, self.q_min - eps * self.pi2],
            ]
        )

    def gamma2_matrix(self, epsilon=None):
        # type: (Optional[float]) -> np.ndarray
        eps = self.epsilon if epsilon is None else float(epsilon)
        return np.array(
            [
                [np.sqrt(eps) * self.gamma3, eps * self.pi1],
                [eps * self.pi1, eps * self.pi2],
            ]
        )

    @property
    def mu1(self):
        # type: () -> float
        """Decay rate of V while communicating."""
        return lambda_min(self.gamma1_matrix()) / self.eta2

    @property
    def mu2_as_printed(self):
        # type: () -> float
        return lambda_min(self.gamma1_matrix()) / self.eta1

    @property
    def mu2(self):
        # type: () -> float
        """Growth rate of V while silent."""
        if self.mu2_variant == MU2_AS_PRINTED:
            return self.mu2_as_printed
        return lambda_max(self.gamma2_matrix()) / self.eta1

    def with_epsilon(self, epsilon):
        # type: (float) -> TheoremConstants
        return attr.evolve(self, epsilon=epsilon)

    def as_dict(self):
        # type: () -> Dict[str, Any]
        data = attr.asdict(self)
        data.update(
            mu1=self.mu1,
            mu2=self.mu2,
            mu2_as_printed=self.mu2_as_printed,
            eps_star=self.eps_star,
            epsilon_admissible=self.epsilon_admissible,
            acr_threshold=acr_threshold(self),
        )
        return data


def build_constants(
    reg,  # type: RegularityConstants
    kbar,  # type: Sequence[float]
    cert,  # type: LyapunovCertificate
    epsilon,  # type: float
    game=None,  # type: Optional[GameModel]
    mu2_variant=MU2_CORRECTED,  # type: str
    strict=False,  # type: bool
):
    # type: (...) -> TheoremConstants
    """Evaluate the theorem constants for gain scale ``epsilon``.

    ``gamma3`` is the smallest eigenvalue of the symmetric part of
    ``-diag(kbar) diag(sigma) M`` when ``game`` is affine; otherwise the
    conservative ``min(kbar) * beta`` is used.

    :raises NonPositiveBeta: if the seek-oriented game is not strongly monotone
    :raises EpsilonTooLarge: if ``strict`` and ``epsilon >= eps*``
    """
    epsilon = float(epsilon)
    if not epsilon > 0:
        raise AnalysisError("epsilon must be positive, got %r" % epsilon)
    if mu2_variant not in MU2_VARIANTS:
        raise AnalysisError("Unknown mu2 variant %r" % mu2_variant)
    kbar = as_vector(kbar)
    n = kbar.shape[0]
    if game is not None and game.affine is not None:
        if game.n != n:
            raise DimensionMismatch("kbar", game.n, n)
        scaled = np.repeat(kbar, game.dims)[:, None] * oriented_jacobian(game)
        gamma3, exact = lambda_min(-scaled), True
    else:
        gamma3, exact = float(kbar.min()) * reg.beta, False
    if not gamma3 > 0 or not reg.beta > 0:
        raise NonPositiveBeta(gamma3)
    kbar_max = float(kbar.max())
    alpha, p_norm, q_min = reg.alpha, cert.p_norm, cert.q_min
    pi1 = alpha * kbar_max * (GAMMA4 / 2.0 + n * p_norm)
    pi2 = 2.0 * alpha * np.sqrt(n) * p_norm * kbar_max
    eps1_star = gamma3 * q_min / (gamma3 * pi2 + pi1 ** 2)
    eps2_star = gamma3 ** 2 * pi2 ** 2 / pi1 ** 4
    eta1 = min(GAMMA1, cert.p_min)
    eta2 = max(GAMMA2, cert.p_max)
    parts = dict(
        alpha=alpha,
        beta=reg.beta,
        gamma3=gamma3,
        gamma3_exact=exact,
        kbar_max=kbar_max,
        n=n,
        p_norm=p_norm,
        p_min=cert.p_min,
        p_max=cert.p_max,
        q_min=q_min,
        pi1=pi1,
        pi2=pi2,
        eps1_star=eps1_star,
        eps2_star=eps2_star,
        eta1=eta1,
        eta2=eta2,
    )
    constants = TheoremConstants(epsilon=epsilon, mu2_variant=mu2_variant, **parts)
    if not constants.epsilon_admissible:
        if strict:
            raise EpsilonTooLarge(epsilon, constants.eps_star)
        logger.warning(
            "epsilon = %g is not below eps* = %.4g; the convergence conditions "
            "are not guaranteed",
            epsilon,
            constants.eps_star,
        )
    return constants


def analyze(
    game,  # type: GameModel
    graph,  # type: DirectedGraph
    kbar,  # type: Sequence[float]
    epsilon=None,  # type: Optional[float]
    q_scale=1.0,  # type: float
    diagonal=False,  # type: bool
    mu2_variant=MU2_CORRECTED,  # type: str
):
    # type: (...) -> Tuple[LyapunovCertificate, TheoremConstants]
    """Certificate and constants for a game on a graph.

    With ``epsilon=None`` the constants are evaluated at ``0.9 * eps*``.
    """
    matrices = coupling_matrices(graph, game.dims)
    q_choice = None if diagonal else q_scale * np.eye(matrices.stack_dim)
    cert = solve_lyapunov_certificate(matrices, q_choice=q_choice, diagonal=diagonal)
    reg = regularity_constants(game)
    if epsilon is None:
        # eps* does not depend on epsilon
        trial = build_constants(reg, kbar, cert, 1e-12, game=game, mu2_variant=mu2_variant)
        return cert, trial.with_epsilon(EPSILON_SAFETY * trial.eps_star)
    constants = build_constants(
        reg, kbar, cert, epsilon, game=game, mu2_variant=mu2_variant
    )
    return cert, constants


def auto_epsilon(game, graph, kbar, q_scale=1.0, diagonal=False):
    # type: (GameModel, DirectedGraph, Sequence[float], float, bool) -> Tuple[float, str]
    """``(epsilon, source)``: ``0.9 * eps*`` when it is finite and positive,
    else the fallback ``0.1``."""
    try:
        _, constants = analyze(game, graph, kbar, q_scale=q_scale, diagonal=diagonal)
    except (NonPositiveBeta, AnalysisError) as exc:
        logger.warning("Cannot compute eps* (%s); using epsilon = %g", exc, EPSILON_FALLBACK)
        return EPSILON_FALLBACK, "fallback"
    eps = constants.epsilon
    if not (np.isfinite(eps) and eps > 0):
        logger.warning("eps* is not finite and positive; using epsilon = %g", EPSILON_FALLBACK)
        return EPSILON_FALLBACK, "fallback"
    return eps, "computed"


@attr.s(frozen=True)
class ConditionReport(object):
    regime = attr.ib()  # type: str
    satisfied = attr.ib()  # type: bool
    margin = attr.ib(converter=float)  # type: float
    inputs = attr.ib(default=attr.Factory(dict))  # type: Dict[str, float]
    mu1 = attr.ib(default=float("nan"), converter=float)  # type: float
    mu2 = attr.ib(default=float("nan"), converter=float)  # type: float
    eps_star = attr.ib(default=float("nan"), converter=float)  # type: float

    def as_dict(self):
        # type: () -> Dict[str, Any]
        return attr.asdict(self)


def _report(c, regime, margin, satisfied=None, **inputs):
    # type: (TheoremConstants, str, float, Optional[bool], Any) -> ConditionReport
    return ConditionReport(
        regime=regime,
        satisfied=bool(margin > 0) if satisfied is None else bool(satisfied),
        margin=margin,
        inputs=inputs,
        mu1=c.mu1,
        mu2=c.mu2,
        eps_star=c.eps_star,
    )


def _ratio(value):
    # type: (float) -> float
    value = float(value)
    if not 0.0 < value < 1.0:
        raise BadRatio(value)
    return value


def check_pic(c, theta_tilde):
    # type: (TheoremConstants, float) -> ConditionReport
    theta = _ratio(theta_tilde)
    return _report(c, PIC, c.mu1 * theta - c.mu2 * (1.0 - theta), theta_tilde=theta)


def check_aic(c, theta_bar, T_bar):
    # type: (TheoremConstants, float, float) -> ConditionReport
    theta_bar, T_bar = float(theta_bar), float(T_bar)
    if not 0.0 < theta_bar < T_bar:
        raise AnalysisError(
            "Need 0 < theta_bar < T_bar, got theta_bar=%r, T_bar=%r" % (theta_bar, T_bar)
        )
    margin = c.mu1 * theta_bar - c.mu2 * (T_bar - theta_bar)
    return _report(c, AIC, margin, theta_bar=theta_bar, T_bar=T_bar)


def check_min_ratio(c, zeta_bar):
    # type: (TheoremConstants, float) -> ConditionReport
    """Margin ``mu1 (1 - zeta) - mu2 zeta`` for the silent-time share ``zeta``.

    ``zeta = 0`` (no silence at all) is accepted.
    """
    zeta = float(zeta_bar)
    if not 0.0 <= zeta < 1.0:
        raise BadRatio(zeta)
    return _report(c, MIN_RATIO, c.mu1 * (1.0 - zeta) - c.mu2 * zeta, zeta_bar=zeta)


def check_acr_condition(c, vartheta):
    # type: (TheoremConstants, float) -> ConditionReport
    vartheta = _ratio(vartheta)
    margin = c.mu1 * vartheta - c.mu2 * (1.0 - vartheta)
    satisfied = vartheta * (c.mu1 + c.mu2) - c.mu2 > 0
    return _report(
        c,
        ACR,
        margin,
        satisfied=satisfied,
        vartheta=vartheta,
        threshold=acr_threshold(c),
    )


def acr_threshold(c):
    # type: (TheoremConstants) -> float
    """``mu2 / (mu1 + mu2)``: the smallest average ratio that guarantees decay."""
    total = c.mu1 + c.mu2
    if total == 0:
        return float("nan")
    return c.mu2 / total


def theta_sweep(c, thetas):
    # type: (TheoremConstants, Sequence[float]) -> List[Tuple[float, float]]
    return [(float(t), check_pic(c, t).margin) for t in thetas]


def lyapunov_trace(traj, x_star, cert):
    # type: (Trajectory, Sequence[float], LyapunovCertificate) -> np.ndarray
    """``V = 0.5 |x - x*|^2 + e_x^T P e_x`` per sample.

    :raises DimensionMismatch: if ``P`` does not match the estimate stack
    """
    stack_dim = traj.y_samples.shape[1]
    if cert.p_matrix.shape[0] != stack_dim:
        raise DimensionMismatch("Lyapunov matrix P", stack_dim, cert.p_matrix.shape[0])
    x_star = as_vector(x_star, traj.x_samples.shape[1], "x_star")
    action_error = traj.x_samples - x_star
    estimate_error = traj.y_samples - traj.consensus_stack()
    return 0.5 * np.einsum("ti,ti->t", action_error, action_error) + cert.energy(
        estimate_error
    )


def sandwich_bounds(traj, x_star, c, cert):
    # type: (Trajectory, Sequence[float], TheoremConstants, LyapunovCertificate) -> Tuple[np.ndarray, np.ndarray, np.ndarray]
    """``(eta1 |Xi|^2, V, eta2 |Xi|^2)`` with ``Xi = (|e|, |e_x|)``."""
    e_norms, ex_norms = error_traces(traj, x_star)
    xi2 = e_norms ** 2 + ex_norms ** 2
    return c.eta1 * xi2, lyapunov_trace(traj, x_star, cert), c.eta2 * xi2


def decay_bound(c, schedule, t, v0):
    # type: (TheoremConstants, Schedule, Any, float) -> Any
    """Envelope ``V(0) exp(-mu1 M(t, 0) + mu2 M^c(t, 0))``."""
    t = np.asarray(t, dtype=float)
    comm = schedule.cumulative(t)
    return v0 * np.exp(-c.mu1 * comm + c.mu2 * (t - comm))


def fit_exponential_rate(times, values, window=None):
    # type: (Sequence[float], Sequence[float], Optional[Tuple[float, float]]) -> float
    """Least-squares decay rate of ``values`` (negated slope of ``log V``).

    :raises NonPositiveValues: if a value in the window is not positive
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape or times.ndim != 1:
        raise DimensionMismatch("rate-fit series", times.shape, values.shape)
    mask = np.ones(times.shape[0], dtype=bool)
    if window is not None:
        mask = (times >= window[0]) & (times <= window[1])
    nonpositive = int(np.count_nonzero(values[mask] <= 0))
    if nonpositive:
        raise NonPositiveValues(nonpositive)
    mask &= values >= RATE_FIT_FLOOR * values[0]
    if np.count_nonzero(mask) < 2:
        raise AnalysisError("Need at least two samples above the noise floor to fit a rate")
    slope = np.polyfit(times[mask], np.log(values[mask]), 1)[0]
    return float(-slope)
