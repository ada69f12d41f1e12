# -*- coding=utf-8 -*-
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nashlib.exceptions import (
    ConfigError,
    DimensionMismatch,
    GameError,
    MissingParameter,
    NotAffine,
    SingularSystem,
)
from nashlib.models import game as games

pytestmark = pytest.mark.game


def energy_closed_form(xq=games.ENERGY_XQ, r1=games.ENERGY_R1, r2=games.ENERGY_R2):
    xq = np.asarray(xq, dtype=float)
    n = xq.shape[0]
    total = (2.0 * xq.sum() - n * r2) / (2.0 + (n + 1) * r1)
    return (2.0 * xq - r2 - r1 * total) / (2.0 + r1)


def cubic_game():
    def gradient(i, v):
        return np.array([-v[i] ** 3 - v[i] + 0.5 * v[1 - i]])

    return games.GameModel(n=2, dims=(1, 1), gradient=gradient, name="cubic")


def test_energy_equilibrium(energy):
    solution = games.solve_nash(energy)
    assert np.allclose(solution.x_star, energy_closed_form(), atol=1e-10)
    assert solution.residual <= 1e-9


def test_energy_matches_published_values(energy):
    x_star = games.solve_nash(energy).x_star
    deviation = np.abs(x_star - np.asarray(games.ENERGY_PUBLISHED_NE))
    assert deviation.max() <= 1e-3
    # the published third coordinate is off in its last digit
    assert np.all(np.delete(deviation, 2) <= 5e-4)


def test_connectivity_equilibrium(connectivity):
    solution = games.solve_nash(connectivity)
    assert np.allclose(solution.x_star, -0.5, atol=1e-6)


def test_energy_affine_coefficients(energy):
    M, b = games.affine_coefficients(energy)
    expected = -0.1 * np.ones((5, 5)) - 2.1 * np.eye(5)
    assert np.allclose(M, expected)
    assert np.allclose(b, 2.0 * np.asarray(games.ENERGY_XQ) - 5.0)


def test_energy_payoff_formula(energy):
    x = np.array([21.0, 5.0, 1.0, 13.0, 16.0])
    expected = -((21.0 - 10.0) ** 2) - 21.0 * (0.1 * x.sum() + 5.0)
    assert energy.payoff(0, x) == pytest.approx(expected)


@pytest.mark.parametrize("name", ["energy", "connectivity"])
@settings(deadline=None, max_examples=200)
@given(data=st.data())
def test_partial_gradient_matches_payoff(name, data):
    game = games.energy_game() if name == "energy" else games.connectivity_game()
    point = np.array(
        data.draw(
            st.lists(
                st.floats(min_value=-15.0, max_value=15.0),
                min_size=game.total_dim,
                max_size=game.total_dim,
            )
        )
    )
    for i in range(game.n):
        blk = game.block(i)

        def own_payoff(u):
            v = point.copy()
            v[blk] = u
            return np.array([game.payoff(i, v)])

        numeric = games.numerical_jacobian(own_payoff, point[blk], step=1e-5)[0]
        analytic = games.partial_gradient(game, i + 1, point)
        assert np.allclose(analytic, numeric, rtol=1e-6, atol=1e-5)


def test_partial_gradient_checks_inputs(energy):
    with pytest.raises(GameError):
        games.partial_gradient(energy, 0, np.zeros(5))
    with pytest.raises(GameError):
        games.partial_gradient(energy, 6, np.zeros(5))
    with pytest.raises(DimensionMismatch):
        games.partial_gradient(energy, 1, np.zeros(4))


def test_pseudo_gradient_vanishes_at_equilibrium(energy, connectivity):
    for game in (energy, connectivity):
        x_star = games.solve_nash(game).x_star
        assert np.allclose(games.pseudo_gradient(game, x_star), 0.0, atol=1e-9)


def test_cubic_game_is_not_affine():
    game = cubic_game()
    with pytest.raises(NotAffine):
        games.affine_coefficients(game)
    assert game.affine is None


def test_cubic_game_solved_by_newton():
    solution = games.solve_nash(cubic_game(), x0=[1.0, -2.0])
    assert np.allclose(solution.x_star, 0.0, atol=1e-8)
    assert solution.iterations >= 1


def test_singular_system():
    game = games.affine_game([[1.0, 1.0], [1.0, 1.0]], [1.0, 1.0], dims=(1, 1))
    with pytest.raises(SingularSystem):
        games.solve_nash(game)


def test_regularity_energy(energy):
    reg = games.regularity_constants(energy)
    assert reg.exact
    assert reg.beta == pytest.approx(2.1, abs=1e-12)
    assert reg.alpha == pytest.approx(np.sqrt(2.2 ** 2 + 4 * 0.1 ** 2))


def test_regularity_connectivity(connectivity):
    reg = games.regularity_constants(connectivity)
    assert reg.beta > 0
    M, b = connectivity.affine
    ascent = games.affine_game(M, b, connectivity.dims)
    # without the descent orientation the same game is not monotone
    assert games.regularity_constants(ascent).beta == 0.0


def test_regularity_decoupled_quadratic():
    reg = games.regularity_constants(games.decoupled_quadratic_game([1.0, -3.0, 2.0]))
    assert reg.alpha == pytest.approx(2.0)
    assert reg.beta == pytest.approx(2.0)


def test_sampled_regularity_brackets_exact(energy):
    sampled = games.sampled_regularity(energy, samples=200, seed=3)
    exact = games.regularity_constants(energy)
    assert not sampled.exact
    assert sampled.beta >= exact.beta - 1e-9
    assert sampled.alpha <= exact.alpha + 1e-9


def test_decoupled_quadratic_equilibrium():
    c = [1.0, -3.0, 2.0]
    assert np.allclose(games.solve_nash(games.decoupled_quadratic_game(c)).x_star, c)


def test_estimate_gradient_at_consensus(energy):
    x = np.array([21.0, 5.0, 1.0, 13.0, 16.0])
    stack = np.tile(x, energy.n)
    assert np.allclose(energy.estimate_gradient(stack), games.pseudo_gradient(energy, x))
    with pytest.raises(DimensionMismatch):
        energy.estimate_gradient(np.zeros(24))


@pytest.mark.parametrize(
    "spec, name",
    [
        ({"kind": "energy"}, "energy"),
        ({"kind": "connectivity"}, "connectivity"),
        ({"kind": "quadratic", "c": [1, 2]}, "quadratic"),
        ({"kind": "affine", "M": [[-1, 0], [0, -1]], "b": [1, 1], "dims": [1, 1]}, "affine"),
    ],
)
def test_game_from_config(spec, name):
    game = games.game_from_config(spec)
    assert game.name == name
    assert game.as_config()["kind"] == name


def test_game_from_config_unknown_kind():
    with pytest.raises(GameError):
        games.game_from_config({"kind": "poker"})


def test_game_from_config_missing_key():
    with pytest.raises(MissingParameter) as excinfo:
        games.game_from_config({"kind": "affine", "b": [0.0, 0.0], "dims": [1, 1]})
    assert "game.M" in excinfo.value.message
    with pytest.raises(MissingParameter):
        games.game_from_config({"kind": "quadratic"})


def test_game_from_config_bad_seek_sign():
    spec = {
        "kind": "affine",
        "M": [[-1.0, 0.0], [0.0, -1.0]],
        "b": [0.0, 0.0],
        "dims": [1, 1],
        "seek_sign": [1],
    }
    with pytest.raises(ConfigError) as excinfo:
        games.game_from_config(spec)
    assert "seek_sign" in excinfo.value.message


def test_oriented_jacobian(energy, connectivity):
    energy_jac = games.oriented_jacobian(energy)
    assert np.allclose(np.diag(energy_jac), -2.2)
    assert energy_jac[0, 1] == pytest.approx(-0.1)
    # connectivity players descend, flipping every row
    assert np.allclose(games.oriented_jacobian(connectivity), -connectivity.affine[0])
    with pytest.raises(NotAffine):
        games.oriented_jacobian(cubic_game())
