import logging

import attr
import numpy as np
import scipy.linalg
from cached_property import cached_property
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ..environment import MYPY_RUNNING
from ..exceptions import (
    DuplicateEdge,
    GraphError,
    IndexOutOfRange,
    NonpositiveWeight,
    NotHurwitz,
    SelfLoop,
)
from ..utils import as_matrix, is_spd, lambda_min, spectral_norm
from .utils import frozen_array, is_array_of_ndim

if MYPY_RUNNING:
    from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

    Edge = Tuple[int, int, float]


logger = logging.getLogger(__name__)

#: Edges of the published five-node cycle, 1-based ``(from, to, weight)``.
CYCLE_EDGES = ((1, 5, 1.0), (5, 4, 1.0), (4, 3, 1.0), (3, 2, 1.0), (2, 1, 1.0))


def _check_weights(instance, attribute, value):
    if value.shape != (instance.n, instance.n):
        raise ValueError(
            "weights must be {0}x{0}, got {1}".format(instance.n, value.shape)
        )
    if np.any(value < 0):
        raise ValueError("weights must be nonnegative")
    if np.any(np.diag(value) != 0):
        raise ValueError("self loops are not allowed (nonzero diagonal)")


@attr.s(frozen=True, eq=False)
class DirectedGraph(object):
    """Weighted communication graph over ``n`` players.

    ``weights[i, j] = a_ij > 0`` iff player ``j`` transmits to player ``i``.
    """

    n = attr.ib(validator=attr.validators.instance_of(int))  # type: int
    weights = attr.ib(
        converter=lambda w: frozen_array(w, ndim=2),
        validator=[is_array_of_ndim(2), _check_weights],
    )  # type: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, DirectedGraph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.weights, other.weights)

    @cached_property
    def in_degrees(self):
        # type: () -> np.ndarray
        return self.weights.sum(axis=1)

    @cached_property
    def laplacian(self):
        # type: () -> np.ndarray
        return np.diag(self.in_degrees) - self.weights

    @property
    def edges(self):
        # type: () -> List[Edge]
        """Edges as 1-based ``(from, to, weight)`` triples, sorted by target."""
        targets, sources = np.nonzero(self.weights)
        return [
            (int(j) + 1, int(i) + 1, float(self.weights[i, j]))
            for i, j in zip(targets, sources)
        ]

    @classmethod
    def from_config(cls, data):
        # type: (Dict[str, Any]) -> DirectedGraph
        return build_graph(int(data["n"]), [tuple(edge) for edge in data["edges"]])

    def as_config(self):
        # type: () -> Dict[str, Any]
        return {"n": self.n, "edges": [list(edge) for edge in self.edges]}

    @classmethod
    def five_cycle(cls):
        # type: () -> DirectedGraph
        return build_graph(5, CYCLE_EDGES)


@attr.s(frozen=True, eq=False)
class CouplingMatrices(object):
    """Laplacian ``L``, injection ``B`` and coupling ``H = L (x) I + B``.

    The estimate stack is row-major over ``(i, c)``: player ``i``'s estimate of
    every action coordinate ``c`` is contiguous. ``dims`` gives the action
    dimension of each player, so scalar games have ``H`` of size ``n**2``.
    """

    laplacian = attr.ib(converter=lambda m: frozen_array(m, ndim=2))  # type: np.ndarray
    coupling = attr.ib(converter=lambda m: frozen_array(m, ndim=2))  # type: np.ndarray
    injection = attr.ib(converter=lambda m: frozen_array(m, ndim=2))  # type: np.ndarray
    dims = attr.ib(converter=tuple)  # type: Tuple[int, ...]

    @property
    def n(self):
        # type: () -> int
        return self.laplacian.shape[0]

    @property
    def total_dim(self):
        # type: () -> int
        return int(sum(self.dims))

    @property
    def stack_dim(self):
        # type: () -> int
        return self.n * self.total_dim

    def spread(self, x):
        # type: (np.ndarray) -> np.ndarray
        """``1_n (x) x``: every player holding the true joint action."""
        return np.tile(x, self.n)

    def estimate_rhs(self, y, x):
        # type: (np.ndarray, np.ndarray) -> np.ndarray
        """Right side of the estimate law while communicating."""
        return -self.coupling.dot(y) + self.injection.dot(self.spread(x))


def build_graph(n, edges):
    # type: (int, Iterable[Edge]) -> DirectedGraph
    """Build a graph from 1-based ``(from, to, weight)`` triples.

    :raises IndexOutOfRange: for a node outside ``1..n``
    :raises SelfLoop: when ``from == to``
    :raises NonpositiveWeight: for weights ``<= 0``
    :raises DuplicateEdge: when an edge appears twice
    """
    if n < 2:
        raise GraphError("A communication graph needs at least two players, got %s" % n)
    weights = np.zeros((n, n))
    seen = set()
    for edge in edges:
        source, target, weight = int(edge[0]), int(edge[1]), float(edge[2])
        for index in (source, target):
            if not 1 <= index <= n:
                raise IndexOutOfRange(index, n)
        if source == target:
            raise SelfLoop(source)
        if not weight > 0:
            raise NonpositiveWeight(source, target, weight)
        if (source, target) in seen:
            raise DuplicateEdge(source, target)
        seen.add((source, target))
        weights[target - 1, source - 1] = weight
    return DirectedGraph(n=n, weights=weights)


def is_strongly_connected(graph):
    # type: (DirectedGraph) -> bool
    adjacency = csr_matrix((graph.weights > 0).astype(np.int8))
    count, _ = connected_components(adjacency, directed=True, connection="strong")
    return count == 1


def coupling_matrices(graph, dims=None):
    # type: (DirectedGraph, Optional[Sequence[int]]) -> CouplingMatrices
    n = graph.n
    dims = tuple(int(d) for d in dims) if dims is not None else (1,) * n
    if len(dims) != n:
        raise GraphError("dims lists %d players, graph has %d" % (len(dims), n))
    # owner[c] is the player whose action coordinate c is
    owner = np.repeat(np.arange(n), dims)
    total_dim = owner.shape[0]
    laplacian = graph.laplacian
    injection = np.diag(graph.weights[:, owner].reshape(-1))
    coupling = np.kron(laplacian, np.eye(total_dim)) + injection
    return CouplingMatrices(
        laplacian=laplacian, coupling=coupling, injection=injection, dims=dims
    )


def laplacian_spectrum(graph):
    # type: (DirectedGraph) -> np.ndarray
    return np.linalg.eigvals(graph.laplacian)


def coupling_spectrum(matrices):
    # type: (CouplingMatrices) -> np.ndarray
    return np.linalg.eigvals(matrices.coupling)


def hurwitz_margin(matrices):
    # type: (CouplingMatrices) -> float
    """Smallest real part among the eigenvalues of ``H``; ``-H`` is Hurwitz
    iff this is positive."""
    return float(np.min(coupling_spectrum(matrices).real))


@attr.s(frozen=True, eq=False)
class LyapunovCertificate(object):
    p_matrix = attr.ib(converter=lambda m: frozen_array(m, ndim=2))  # type: np.ndarray
    q_matrix = attr.ib(converter=lambda m: frozen_array(m, ndim=2))  # type: np.ndarray
    residual = attr.ib(converter=float)  # type: float
    diagonal = attr.ib(default=False)  # type: bool

    @cached_property
    def p_norm(self):
        # type: () -> float
        return spectral_norm(self.p_matrix)

    @cached_property
    def p_eigenvalues(self):
        # type: () -> np.ndarray
        return np.linalg.eigvalsh(self.p_matrix)

    @property
    def p_min(self):
        # type: () -> float
        return float(self.p_eigenvalues[0])

    @property
    def p_max(self):
        # type: () -> float
        return float(self.p_eigenvalues[-1])

    @cached_property
    def q_min(self):
        # type: () -> float
        return lambda_min(self.q_matrix)

    def energy(self, ex):
        # type: (np.ndarray) -> np.ndarray
        """``e_x^T P e_x`` for one stack or row-wise for a 2-d array."""
        ex = np.asarray(ex, dtype=float)
        if ex.ndim == 1:
            return float(ex.dot(self.p_matrix).dot(ex))
        return np.einsum("ti,ij,tj->t", ex, self.p_matrix, ex)


def solve_lyapunov_certificate(matrices, q_choice=None, diagonal=False):
    # type: (CouplingMatrices, Optional[np.ndarray], bool) -> LyapunovCertificate
    """Solve ``H^T P + P H = Q`` for an SPD ``P``.

    With ``diagonal=True`` a diagonal ``P`` is constructed from the M-matrix
    structure of ``H`` (``P = diag(v / u)`` with ``H u = 1`` and ``H^T v = 1``)
    and the resulting ``Q`` is returned; ``q_choice`` is then ignored.

    :raises NotHurwitz: if some eigenvalue of ``-H`` has nonnegative real part
    """
    coupling = np.asarray(matrices.coupling)
    size = coupling.shape[0]
    margin = hurwitz_margin(matrices)
    if margin <= 1e-12 * max(1.0, spectral_norm(coupling)):
        raise NotHurwitz(margin)
    if diagonal:
        ones = np.ones(size)
        right = np.linalg.solve(coupling, ones)
        left = np.linalg.solve(coupling.T, ones)
        p_matrix = np.diag(left / right)
        q_matrix = coupling.T.dot(p_matrix) + p_matrix.dot(coupling)
        q_matrix = 0.5 * (q_matrix + q_matrix.T)
    else:
        q_matrix = np.eye(size) if q_choice is None else as_matrix(q_choice, (size, size))
        if not is_spd(q_matrix):
            raise GraphError("Q must be symmetric positive definite")
        # solve_continuous_lyapunov solves A X + X A^H = Q; A = H^T
        p_matrix = scipy.linalg.solve_continuous_lyapunov(coupling.T, q_matrix)
        p_matrix = 0.5 * (p_matrix + p_matrix.T)
    residual = np.linalg.norm(
        coupling.T.dot(p_matrix) + p_matrix.dot(coupling) - q_matrix, "fro"
    )
    if not is_spd(p_matrix):
        raise NotHurwitz(margin)
    logger.debug(
        "Lyapunov certificate: |P| = %.4g, residual = %.3e, diagonal = %s",
        spectral_norm(p_matrix),
        residual,
        diagonal,
    )
    return LyapunovCertificate(
        p_matrix=p_matrix, q_matrix=q_matrix, residual=residual, diagonal=diagonal
    )
