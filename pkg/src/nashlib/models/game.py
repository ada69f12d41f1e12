import logging

import attr
import numpy as np
from cached_property import cached_property

from ..environment import MYPY_RUNNING
from ..exceptions import (
    ConfigError,
    DimensionMismatch,
    GameError,
    MissingParameter,
    NoConvergence,
    NotAffine,
    SingularSystem,
)
from ..utils import as_matrix, as_vector, lambda_min, spectral_norm, sym
from .utils import frozen_array

if MYPY_RUNNING:
    from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

    GradientFn = Callable[[int, np.ndarray], np.ndarray]
    PayoffFn = Callable[[int, np.ndarray], float]


logger = logging.getLogger(__name__)

#: Default parameters of the electrical energy consumption game.
ENERGY_XQ = (10.0, 15.0, 20.0, 25.0, 30.0)
ENERGY_R1 = 0.1
ENERGY_R2 = 5.0
#: Published equilibrium (4 decimals).
ENERGY_PUBLISHED_NE = (3.9379, 8.6996, 13.4609, 18.2236, 22.9854)

#: Pairwise distance terms of the connectivity game, 1-based:
#: player -> players whose squared distance enters its payoff.
CONNECTIVITY_NEIGHBORS = {1: (2,), 2: (3,), 3: (2,), 4: (2, 5), 5: (1,)}

AFFINE_TOL = 1e-9


def _check_signs(instance, attribute, value):
    if len(value) != instance.n or any(s not in (1, -1) for s in value):
        raise ValueError("seek_sign must hold one of +1/-1 per player")


@attr.s(frozen=True, eq=False)
class GameModel(object):
    """A game given by each player's own-action payoff gradient.

    ``gradient(i, v)`` returns the partial gradient of ``f_i`` with respect to
    player ``i``'s own action block (``i`` is 0-based) with every argument read
    from the joint vector ``v``.
    """

    n = attr.ib(converter=int)  # type: int
    dims = attr.ib(converter=lambda d: tuple(int(k) for k in d))  # type: Tuple[int, ...]
    gradient = attr.ib(repr=False)  # type: GradientFn
    seek_sign = attr.ib(
        default=None, converter=attr.converters.optional(tuple)
    )  # type: Tuple[int, ...]
    payoff = attr.ib(default=None, repr=False)  # type: Optional[PayoffFn]
    name = attr.ib(default="custom")  # type: str
    params = attr.ib(default=attr.Factory(dict), repr=False)  # type: Dict[str, Any]

    def __attrs_post_init__(self):
        if self.seek_sign is None:
            object.__setattr__(self, "seek_sign", (1,) * self.n)
        _check_signs(self, None, self.seek_sign)
        if len(self.dims) != self.n or min(self.dims) < 1:
            raise GameError("dims must list a positive dimension for each player")

    @property
    def total_dim(self):
        # type: () -> int
        return int(sum(self.dims))

    @cached_property
    def offsets(self):
        # type: () -> np.ndarray
        return np.concatenate([[0], np.cumsum(self.dims)]).astype(int)

    def block(self, i):
        # type: (int) -> slice
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    @cached_property
    def sign_vector(self):
        # type: () -> np.ndarray
        return np.repeat(np.asarray(self.seek_sign, dtype=float), self.dims)

    @cached_property
    def affine(self):
        # type: () -> Optional[Tuple[np.ndarray, np.ndarray]]
        """``(M, b)`` when the pseudo-gradient is affine, else ``None``."""
        try:
            return affine_coefficients(self)
        except NotAffine:
            return None

    @cached_property
    def own_rows(self):
        # type: () -> Optional[np.ndarray]
        """Block-diagonal stacking of each player's rows of ``M`` so that
        ``own_rows @ y + b`` evaluates every player's gradient at its own
        estimate vector."""
        if self.affine is None:
            return None
        jacobian = self.affine[0]
        total = self.total_dim
        rows = np.zeros((total, self.n * total))
        for i in range(self.n):
            blk = self.block(i)
            rows[blk, i * total : (i + 1) * total] = jacobian[blk, :]
        return rows

    def estimate_gradient(self, y):
        # type: (np.ndarray) -> np.ndarray
        """Stack of ``df_i/dx_i(y_i)`` over players for an estimate stack ``y``."""
        total = self.total_dim
        if y.shape[0] != self.n * total:
            raise DimensionMismatch("estimate stack", self.n * total, y.shape[0])
        if self.affine is not None:
            return self.own_rows.dot(y) + self.affine[1]
        return np.concatenate(
            [
                np.asarray(self.gradient(i, y[i * total : (i + 1) * total]), dtype=float)
                for i in range(self.n)
            ]
        )

    def as_config(self):
        # type: () -> Dict[str, Any]
        config = {"kind": self.name}
        config.update(self.params)
        return config


def partial_gradient(game, player, v):
    # type: (GameModel, int, Sequence[float]) -> np.ndarray
    """Own-action gradient of player ``player`` (1-based) evaluated at ``v``."""
    if not 1 <= player <= game.n:
        raise GameError("player index %s outside 1..%s" % (player, game.n))
    v = as_vector(v, game.total_dim, "joint vector")
    return np.asarray(game.gradient(player - 1, v), dtype=float).reshape(-1)


def pseudo_gradient(game, x):
    # type: (GameModel, Sequence[float]) -> np.ndarray
    x = as_vector(x, game.total_dim, "joint action")
    return np.concatenate(
        [np.asarray(game.gradient(i, x), dtype=float).reshape(-1) for i in range(game.n)]
    )


def affine_coefficients(game, tol=AFFINE_TOL):
    # type: (GameModel, float) -> Tuple[np.ndarray, np.ndarray]
    """Recover ``M, b`` with ``pseudo_gradient(x) = M x + b``.

    Coefficients are read off unit vectors and then verified on ``total_dim + 1``
    fresh points.

    :raises NotAffine: if the verification residual exceeds ``tol``
    """
    total = game.total_dim
    offset = pseudo_gradient(game, np.zeros(total))
    jacobian = np.empty((total, total))
    for k, unit in enumerate(np.eye(total)):
        jacobian[:, k] = pseudo_gradient(game, unit) - offset
    rng = np.random.RandomState(20230)
    worst = 0.0
    for point in rng.uniform(-10.0, 10.0, size=(total + 1, total)):
        value = pseudo_gradient(game, point)
        scale = max(1.0, float(np.max(np.abs(value))))
        worst = max(worst, float(np.max(np.abs(jacobian.dot(point) + offset - value))) / scale)
    if worst > tol:
        raise NotAffine(worst)
    return jacobian, offset


def oriented_jacobian(game):
    # type: (GameModel) -> np.ndarray
    """``diag(sigma) M``: the Jacobian of the seek-oriented pseudo-gradient."""
    if game.affine is None:
        raise NotAffine(float("nan"))
    return game.sign_vector[:, None] * game.affine[0]


def numerical_jacobian(func, x, step=1e-6):
    # type: (Callable[[np.ndarray], np.ndarray], np.ndarray, float) -> np.ndarray
    x = np.asarray(x, dtype=float)
    columns = []
    for k in range(x.shape[0]):
        h = step * max(1.0, abs(x[k]))
        forward, backward = x.copy(), x.copy()
        forward[k] += h
        backward[k] -= h
        columns.append((func(forward) - func(backward)) / (2 * h))
    return np.stack(columns, axis=1)


@attr.s(frozen=True)
class NashSolution(object):
    x_star = attr.ib(converter=frozen_array, eq=False)  # type: np.ndarray
    residual = attr.ib(converter=float)  # type: float
    iterations = attr.ib(converter=int)  # type: int

    def as_dict(self):
        # type: () -> Dict[str, Any]
        return {
            "x_star": self.x_star.tolist(),
            "residual": self.residual,
            "iterations": self.iterations,
        }


def solve_nash(game, x0=None, tol=1e-9, max_iter=50):
    # type: (GameModel, Optional[Sequence[float]], float, int) -> NashSolution
    """Solve the stationarity condition ``pseudo_gradient(x) = 0``.

    Affine games are solved with one linear solve; other games with a damped
    Newton iteration from ``x0``.

    :raises SingularSystem: if the affine system is singular
    :raises NoConvergence: if the iteration budget runs out
    """
    if not tol > 0:
        raise GameError("tol must be positive")
    total = game.total_dim
    x0 = np.zeros(total) if x0 is None else as_vector(x0, total, "x0")
    if game.affine is not None:
        jacobian, offset = game.affine
        if np.linalg.cond(jacobian) > 1e12:
            raise SingularSystem("condition number %.3e" % np.linalg.cond(jacobian))
        x_star = np.linalg.solve(jacobian, -offset)
        residual = float(np.linalg.norm(pseudo_gradient(game, x_star)))
        iterations = 1
        if residual > tol:
            # one step of iterative refinement
            x_star = x_star - np.linalg.solve(jacobian, pseudo_gradient(game, x_star))
            residual = float(np.linalg.norm(pseudo_gradient(game, x_star)))
            iterations = 2
        if residual > tol:
            raise NoConvergence(iterations, residual)
        return NashSolution(x_star=x_star, residual=residual, iterations=iterations)
    return _damped_newton(game, x0, tol, max_iter)


def _damped_newton(game, x, tol, max_iter):
    # type: (GameModel, np.ndarray, float, int) -> NashSolution
    def residual_of(point):
        return pseudo_gradient(game, point)

    value = residual_of(x)
    norm = float(np.linalg.norm(value))
    for iteration in range(1, max_iter + 1):
        if norm <= tol:
            return NashSolution(x_star=x, residual=norm, iterations=iteration - 1)
        jacobian = numerical_jacobian(residual_of, x)
        try:
            step = np.linalg.solve(jacobian, -value)
        except np.linalg.LinAlgError:
            raise SingularSystem("Newton Jacobian singular at iteration %d" % iteration)
        scale = 1.0
        for _ in range(30):
            candidate = x + scale * step
            candidate_value = residual_of(candidate)
            candidate_norm = float(np.linalg.norm(candidate_value))
            if candidate_norm < norm:
                break
            scale *= 0.5
        else:
            raise NoConvergence(iteration, norm)
        x, value, norm = candidate, candidate_value, candidate_norm
        logger.debug("newton iteration %d: residual %.3e (step scale %g)", iteration, norm, scale)
    if norm <= tol:
        return NashSolution(x_star=x, residual=norm, iterations=max_iter)
    raise NoConvergence(max_iter, norm)


@attr.s(frozen=True)
class RegularityConstants(object):
    #: Lipschitz constant of each own-action gradient over the full argument
    alpha = attr.ib(converter=float)  # type: float
    #: strong monotonicity modulus of the seek-oriented pseudo-gradient
    beta = attr.ib(converter=float)  # type: float
    exact = attr.ib(default=True)  # type: bool

    def as_dict(self):
        # type: () -> Dict[str, Any]
        return attr.asdict(self)


def regularity_constants(game, box=(-15.0, 15.0), samples=400, seed=0):
    # type: (GameModel, Tuple[float, float], int, int) -> RegularityConstants
    """Estimate ``alpha`` (Lipschitz) and ``beta`` (strong monotonicity).

    Exact for affine games, where beta is measured in the seek orientation;
    otherwise sampled over ``box``.
    """
    if game.affine is None:
        return sampled_regularity(game, box=box, samples=samples, seed=seed)
    jacobian = game.affine[0]
    alpha = max(spectral_norm(jacobian[game.block(i), :]) for i in range(game.n))
    beta = max(0.0, lambda_min(-oriented_jacobian(game)))
    return RegularityConstants(alpha=alpha, beta=beta, exact=True)


def sampled_regularity(game, box=(-15.0, 15.0), samples=400, seed=0):
    # type: (GameModel, Tuple[float, float], int, int) -> RegularityConstants
    rng = np.random.RandomState(seed)
    low, high = box
    alpha, beta = 0.0, np.inf
    signs = game.sign_vector
    for _ in range(samples):
        x, z = rng.uniform(low, high, size=(2, game.total_dim))
        diff = x - z
        dist2 = float(diff.dot(diff))
        if dist2 == 0.0:
            continue
        gx, gz = pseudo_gradient(game, x), pseudo_gradient(game, z)
        for i in range(game.n):
            blk = game.block(i)
            alpha = max(alpha, float(np.linalg.norm(gx[blk] - gz[blk])) / np.sqrt(dist2))
        beta = min(beta, -float(diff.dot(signs * (gx - gz))) / dist2)
    return RegularityConstants(alpha=alpha, beta=max(0.0, beta), exact=False)


# -- built-in games ----------------------------------------------------------


def energy_game(xq=ENERGY_XQ, r1=ENERGY_R1, r2=ENERGY_R2):
    # type: (Sequence[float], float, float) -> GameModel
    """Electrical energy consumption game,
    ``f_i = -(x_i - xq_i)^2 - x_i (r1 sum(x) + r2)``."""
    xq = as_vector(xq)
    r1, r2 = float(r1), float(r2)

    def gradient(i, v):
        return np.array([-2.0 * (v[i] - xq[i]) - (r1 * v.sum() + r2) - r1 * v[i]])

    def payoff(i, v):
        return float(-((v[i] - xq[i]) ** 2) - v[i] * (r1 * v.sum() + r2))

    return GameModel(
        n=xq.shape[0],
        dims=(1,) * xq.shape[0],
        gradient=gradient,
        payoff=payoff,
        name="energy",
        params={"xq": xq.tolist(), "r1": r1, "r2": r2},
    )


def connectivity_game(neighbors=None):
    # type: (Optional[Dict[int, Sequence[int]]]) -> GameModel
    """Connectivity control game with planar actions.

    ``f_i = x_i^T (i I) x_i + x_i^T (i, i) + i + sum_k |x_i - x_k|^2`` over the
    neighbor list. The payoffs are convex in the own action, so every player
    descends (``seek_sign = -1``).
    """
    neighbors = dict(CONNECTIVITY_NEIGHBORS if neighbors is None else neighbors)
    n = len(neighbors)
    lookup = [tuple(k - 1 for k in neighbors[i + 1]) for i in range(n)]

    def gradient(i, v):
        pts = v.reshape(n, 2)
        weight = i + 1.0
        grad = 2.0 * weight * pts[i] + weight
        for k in lookup[i]:
            grad = grad + 2.0 * (pts[i] - pts[k])
        return grad

    def payoff(i, v):
        pts = v.reshape(n, 2)
        weight = i + 1.0
        value = weight * pts[i].dot(pts[i]) + weight * pts[i].sum() + weight
        for k in lookup[i]:
            diff = pts[i] - pts[k]
            value += diff.dot(diff)
        return float(value)

    return GameModel(
        n=n,
        dims=(2,) * n,
        gradient=gradient,
        seek_sign=(-1,) * n,
        payoff=payoff,
        name="connectivity",
        params={"neighbors": {str(k): list(v) for k, v in sorted(neighbors.items())}},
    )


def affine_game(M, b, dims, seek_sign=None):
    # type: (Sequence, Sequence[float], Sequence[int], Optional[Sequence[int]]) -> GameModel
    """Game whose pseudo-gradient is ``M x + b``."""
    dims = tuple(int(d) for d in dims)
    total = sum(dims)
    jacobian = frozen_array(as_matrix(M, (total, total), "M"), ndim=2)
    offset = frozen_array(as_vector(b, total, "b"))
    offsets = np.concatenate([[0], np.cumsum(dims)]).astype(int)

    def gradient(i, v):
        blk = slice(offsets[i], offsets[i + 1])
        return jacobian[blk, :].dot(v) + offset[blk]

    params = {"M": jacobian.tolist(), "b": offset.tolist(), "dims": list(dims)}
    if seek_sign is not None:
        params["seek_sign"] = list(seek_sign)
    return GameModel(
        n=len(dims),
        dims=dims,
        gradient=gradient,
        seek_sign=seek_sign,
        name="affine",
        params=params,
    )


def decoupled_quadratic_game(c):
    # type: (Sequence[float]) -> GameModel
    """``f_i = -(x_i - c_i)^2`` with no coupling; ``x* = c``."""
    c = as_vector(c)

    def gradient(i, v):
        return np.array([-2.0 * (v[i] - c[i])])

    def payoff(i, v):
        return float(-((v[i] - c[i]) ** 2))

    return GameModel(
        n=c.shape[0],
        dims=(1,) * c.shape[0],
        gradient=gradient,
        payoff=payoff,
        name="quadratic",
        params={"c": c.tolist()},
    )


GAME_BUILDERS = {
    "energy": lambda spec: energy_game(
        spec.get("xq", ENERGY_XQ), spec.get("r1", ENERGY_R1), spec.get("r2", ENERGY_R2)
    ),
    "connectivity": lambda spec: connectivity_game(
        {int(k): v for k, v in spec["neighbors"].items()} if "neighbors" in spec else None
    ),
    "affine": lambda spec: affine_game(
        spec["M"], spec["b"], spec["dims"], spec.get("seek_sign")
    ),
    "quadratic": lambda spec: decoupled_quadratic_game(spec["c"]),
}


def game_from_config(spec):
    # type: (Dict[str, Any]) -> GameModel
    kind = spec.get("kind")
    try:
        builder = GAME_BUILDERS[kind]
    except KeyError:
        raise GameError("Unknown game kind: %r" % kind)
    try:
        return builder(spec)
    except KeyError as exc:
        raise MissingParameter("game.{0}".format(exc.args[0]))
    except (TypeError, ValueError) as exc:
        raise ConfigError("Invalid {0} game: {1}".format(kind, exc))
