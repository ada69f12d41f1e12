# -*- coding=utf-8 -*-
import numpy as np
import pytest
from hypothesis import given, settings

from nashlib.exceptions import (
    DuplicateEdge,
    GraphError,
    IndexOutOfRange,
    NonpositiveWeight,
    NotHurwitz,
    SelfLoop,
)
from nashlib.models import graph as graphs
from nashlib.utils import is_spd

from .strategies import graph_specs

pytestmark = pytest.mark.graph


def reachability_closure(weights):
    """Boolean transitive closure by Floyd-Warshall; ``reach[i, j]`` means
    ``j`` reaches ``i``."""
    n = weights.shape[0]
    reach = (weights > 0) | np.eye(n, dtype=bool)
    for k in range(n):
        reach = reach | (reach[:, [k]] & reach[[k], :])
    return reach


@pytest.mark.parametrize(
    "n, edges, exc_type",
    [
        (3, [(1, 1, 1.0)], SelfLoop),
        (3, [(1, 2, 1.0), (1, 2, 2.0)], DuplicateEdge),
        (3, [(0, 2, 1.0)], IndexOutOfRange),
        (3, [(1, 4, 1.0)], IndexOutOfRange),
        (3, [(1, 2, 0.0)], NonpositiveWeight),
        (3, [(1, 2, -1.0)], NonpositiveWeight),
        (1, [], GraphError),
    ],
)
def test_build_graph_rejects(n, edges, exc_type):
    with pytest.raises(exc_type):
        graphs.build_graph(n, edges)


def test_weights_orientation():
    graph = graphs.build_graph(3, [(1, 2, 2.5)])
    # player 2 receives from player 1
    assert graph.weights[1, 0] == 2.5
    assert graph.weights[0, 1] == 0.0
    assert graph.edges == [(1, 2, 2.5)]


def test_cycle_laplacian(cycle_graph):
    assert np.array_equal(cycle_graph.in_degrees, np.ones(5))
    laplacian = cycle_graph.laplacian
    assert np.allclose(laplacian.sum(axis=1), 0.0)
    assert np.allclose(np.diag(laplacian), 1.0)
    assert laplacian[0, 1] == -1.0
    assert laplacian[4, 0] == -1.0


def test_config_round_trip(cycle_graph):
    rebuilt = graphs.DirectedGraph.from_config(cycle_graph.as_config())
    assert rebuilt == cycle_graph


def test_cycle_is_strongly_connected(cycle_graph):
    assert graphs.is_strongly_connected(cycle_graph)
    broken = graphs.build_graph(5, graphs.CYCLE_EDGES[:-1])
    assert not graphs.is_strongly_connected(broken)


@settings(deadline=None, max_examples=1000)
@given(graph_specs())
def test_strong_connectivity_matches_closure(spec):
    graph = graphs.build_graph(spec.n, spec.edges)
    expected = bool(reachability_closure(graph.weights).all())
    assert graphs.is_strongly_connected(graph) is expected


def test_coupling_shapes(cycle_graph):
    matrices = graphs.coupling_matrices(cycle_graph, (1,) * 5)
    assert matrices.total_dim == 5
    assert matrices.stack_dim == 25
    assert matrices.coupling.shape == (25, 25)
    planar = graphs.coupling_matrices(cycle_graph, (2,) * 5)
    assert planar.stack_dim == 50


def test_injection_marks_neighbor_coordinates(cycle_graph):
    matrices = graphs.coupling_matrices(cycle_graph)
    injection = np.diag(matrices.injection).reshape(5, 5)
    # player 1 hears only from player 2, so it learns coordinate 2 directly
    assert np.array_equal(injection[0], [0.0, 1.0, 0.0, 0.0, 0.0])
    assert np.array_equal(injection, cycle_graph.weights)


def test_consensus_is_fixed_point_of_estimates(cycle_graph):
    matrices = graphs.coupling_matrices(cycle_graph)
    x = np.array([1.0, -2.0, 3.0, 0.5, 4.0])
    assert np.allclose(matrices.estimate_rhs(matrices.spread(x), x), 0.0, atol=1e-12)


def componentwise_estimate_rhs(weights, dims, y, x):
    """``-sum_k a_ik (y_ij - y_kj) - a_ij (y_ij - x_j)`` coordinate by coordinate."""
    n = weights.shape[0]
    offsets = np.concatenate([[0], np.cumsum(dims)]).astype(int)
    total = offsets[-1]
    out = np.zeros(n * total)
    for i in range(n):
        for j in range(n):
            for c in range(offsets[j], offsets[j + 1]):
                row = i * total + c
                value = 0.0
                for k in range(n):
                    value -= weights[i, k] * (y[row] - y[k * total + c])
                value -= weights[i, j] * (y[row] - x[c])
                out[row] = value
    return out


@pytest.mark.parametrize("dims", [(1, 1, 1, 1), (1, 2, 1, 2)])
def test_coupling_matches_componentwise_law(dims):
    state = np.random.RandomState(7)
    weights = state.uniform(0.5, 2.0, size=(4, 4)) * (state.uniform(size=(4, 4)) < 0.6)
    np.fill_diagonal(weights, 0.0)
    graph = graphs.DirectedGraph(n=4, weights=weights)
    matrices = graphs.coupling_matrices(graph, dims)
    for _ in range(100):
        x = state.uniform(-10.0, 10.0, size=matrices.total_dim)
        y = state.uniform(-10.0, 10.0, size=matrices.stack_dim)
        np.testing.assert_allclose(
            matrices.estimate_rhs(y, x),
            componentwise_estimate_rhs(weights, dims, y, x),
            rtol=0.0,
            atol=1e-12,
        )


def test_coupling_single_edge():
    w = 1.5
    matrices = graphs.coupling_matrices(graphs.build_graph(2, [(1, 2, w)]))
    assert np.array_equal(matrices.laplacian, [[0.0, 0.0], [-w, w]])
    assert np.array_equal(matrices.injection, np.diag([0.0, 0.0, w, 0.0]))
    expected = np.kron(matrices.laplacian, np.eye(2)) + np.diag([0.0, 0.0, w, 0.0])
    assert np.array_equal(matrices.coupling, expected)


def test_coupling_dims_mismatch(cycle_graph):
    with pytest.raises(GraphError):
        graphs.coupling_matrices(cycle_graph, (1, 1))


def test_cycle_is_hurwitz(cycle_graph):
    matrices = graphs.coupling_matrices(cycle_graph)
    assert graphs.hurwitz_margin(matrices) > 0
    assert np.all(graphs.laplacian_spectrum(cycle_graph).real >= -1e-12)


def test_certificate_on_cycle(cycle_graph):
    matrices = graphs.coupling_matrices(cycle_graph)
    cert = graphs.solve_lyapunov_certificate(matrices, q_choice=np.eye(25))
    assert cert.residual <= 1e-10
    assert cert.p_min > 0
    assert is_spd(cert.p_matrix)
    assert cert.q_min == pytest.approx(1.0)


def test_scalar_certificate_by_hand():
    matrices = graphs.CouplingMatrices(
        laplacian=[[0.0]], coupling=[[2.0]], injection=[[2.0]], dims=(1,)
    )
    cert = graphs.solve_lyapunov_certificate(matrices)
    assert cert.p_matrix[0, 0] == pytest.approx(0.25)
    assert cert.energy(np.array([2.0])) == pytest.approx(1.0)


def test_diagonal_certificate(cycle_graph):
    matrices = graphs.coupling_matrices(cycle_graph)
    cert = graphs.solve_lyapunov_certificate(matrices, diagonal=True)
    assert cert.diagonal
    off_diagonal = cert.p_matrix - np.diag(np.diag(cert.p_matrix))
    assert np.all(off_diagonal == 0.0)
    assert np.all(np.diag(cert.p_matrix) > 0)
    assert is_spd(cert.q_matrix)


def test_not_hurwitz_without_listener():
    chain = graphs.build_graph(3, [(1, 2, 1.0), (2, 3, 1.0)])
    with pytest.raises(NotHurwitz):
        graphs.solve_lyapunov_certificate(graphs.coupling_matrices(chain))


def test_not_hurwitz_for_unstable_scalar():
    matrices = graphs.CouplingMatrices(
        laplacian=[[0.0]], coupling=[[-1.0]], injection=[[0.0]], dims=(1,)
    )
    with pytest.raises(NotHurwitz) as excinfo:
        graphs.solve_lyapunov_certificate(matrices)
    assert excinfo.value.margin == pytest.approx(-1.0)


def test_certificate_rejects_indefinite_q(cycle_graph):
    matrices = graphs.coupling_matrices(cycle_graph)
    with pytest.raises(GraphError):
        graphs.solve_lyapunov_certificate(matrices, q_choice=-np.eye(25))


def test_coupling_spectrum_sets_the_margin(cycle_graph):
    matrices = graphs.coupling_matrices(cycle_graph)
    spectrum = graphs.coupling_spectrum(matrices)
    assert spectrum.shape == (25,)
    assert graphs.hurwitz_margin(matrices) == pytest.approx(np.min(spectrum.real))
