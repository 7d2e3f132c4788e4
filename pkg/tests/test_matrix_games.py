"""Matrix-game primitives: best responses, tie rules, and the LP solver."""

from __future__ import annotations

import numpy as np
import pytest

from zsfp import TieRule, best_response_col, best_response_row, minimax_solve
from conftest import grid_minimax_value

_SIMPLEX_TOL = 1e-9
_DUALITY_TOL = 1e-9


def _check_solution(matrix, sol):
    """Assert the guarantees every minimax solution must satisfy.

    Deliberately does not pin a particular optimizer: degenerate games have
    many optimal strategies, and only the guarantee is part of the contract.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    for strat, n in ((sol.row_strategy, matrix.shape[0]), (sol.col_strategy, matrix.shape[1])):
        assert strat.shape == (n,)
        assert strat.min() >= -_SIMPLEX_TOL
        assert abs(strat.sum() - 1.0) <= _SIMPLEX_TOL
    # the row mixture guarantees at least the value against every column,
    # the column mixture caps the row player at the value from above
    lower = (sol.row_strategy @ matrix).min()
    upper = (matrix @ sol.col_strategy).max()
    assert lower >= sol.value - _DUALITY_TOL
    assert upper <= sol.value + _DUALITY_TOL
    assert upper - lower <= 2 * _DUALITY_TOL


def test_minimax_known_mixed_game():
    sol = minimax_solve([[3.0, 1.0], [0.0, 2.0]])
    assert sol.value == pytest.approx(1.5, abs=1e-9)
    assert sol.row_strategy == pytest.approx([0.5, 0.5], abs=1e-9)
    assert sol.col_strategy == pytest.approx([0.25, 0.75], abs=1e-9)


def test_minimax_saddle_point_game():
    # entry (1, 0) is a saddle: row 1 maximizes the row minima, column 0
    # minimizes the column maxima, both at 2
    sol = minimax_solve([[1.0, 0.0], [2.0, 3.0]])
    assert sol.value == pytest.approx(2.0, abs=1e-12)
    _check_solution([[1.0, 0.0], [2.0, 3.0]], sol)


def test_minimax_single_row_and_single_column():
    sol = minimax_solve([[4.0, -1.0, 2.0]])
    assert sol.value == pytest.approx(-1.0)
    assert sol.col_strategy == pytest.approx([0.0, 1.0, 0.0])
    sol = minimax_solve([[4.0], [-1.0], [2.0]])
    assert sol.value == pytest.approx(4.0)
    assert sol.row_strategy == pytest.approx([1.0, 0.0, 0.0])


def test_minimax_constant_matrix():
    sol = minimax_solve(np.full((3, 3), 2.5))
    assert sol.value == pytest.approx(2.5, abs=1e-9)
    _check_solution(np.full((3, 3), 2.5), sol)


def test_minimax_matches_grid_oracle_on_small_integer_games():
    rng = np.random.default_rng(42)
    for _ in range(100):
        m = int(rng.integers(1, 4))
        n = int(rng.integers(1, 4))
        matrix = rng.integers(-3, 4, size=(m, n)).astype(np.float64)
        sol = minimax_solve(matrix)
        _check_solution(matrix, sol)
        assert sol.value == pytest.approx(grid_minimax_value(matrix), abs=6e-3)


def test_minimax_guarantees_on_random_real_games():
    rng = np.random.default_rng(7)
    for _ in range(200):
        shape = (int(rng.integers(1, 7)), int(rng.integers(1, 7)))
        matrix = rng.uniform(-5.0, 5.0, size=shape)
        _check_solution(matrix, minimax_solve(matrix))


def test_minimax_handles_degenerate_duplicate_rows():
    """Duplicate rows/columns make the LP degenerate; Bland's rule must cope."""
    rng = np.random.default_rng(13)
    for _ in range(50):
        base = rng.uniform(-2.0, 2.0, size=(2, 4))
        matrix = base[rng.integers(0, 2, size=5)]  # 5 rows drawn from 2 distinct
        _check_solution(matrix, minimax_solve(matrix))


def test_minimax_affine_covariance():
    """value(c*M + d) = c*value(M) + d for positive c."""
    rng = np.random.default_rng(3)
    matrix = rng.uniform(-1.0, 1.0, size=(4, 4))
    base = minimax_solve(matrix).value
    shifted = minimax_solve(2.5 * matrix - 3.0).value
    assert shifted == pytest.approx(2.5 * base - 3.0, abs=1e-8)


def test_minimax_transpose_antisymmetry():
    """Swapping roles negates the value: val(-M^T) = -val(M)."""
    rng = np.random.default_rng(21)
    for _ in range(50):
        matrix = rng.uniform(-3.0, 3.0, size=(3, 4))
        v = minimax_solve(matrix).value
        w = minimax_solve(np.ascontiguousarray(-matrix.T)).value
        assert w == pytest.approx(-v, abs=1e-8)


def test_minimax_rejects_bad_input():
    with pytest.raises(ValueError):
        minimax_solve(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        minimax_solve([[np.nan, 0.0], [0.0, 0.0]])


def test_best_response_row_picks_the_best_expected_payoff():
    # expected payoffs against (0.8, 0.2): row 0 -> 0.8, row 1 -> 2.6
    assert best_response_row([[0.0, 4.0], [3.0, 1.0]], [0.8, 0.2]) == 1


def test_best_response_col_maximizes_the_column_players_payoff():
    # column payoffs under row mixture (0.3, 0.7): col 0 -> 0.3, col 1 -> 0.7
    assert best_response_col(np.eye(2), [0.3, 0.7]) == 1


def test_best_response_breaks_ties_at_the_lowest_index():
    assert best_response_row(np.zeros((3, 2)), [0.5, 0.5]) == 0
    assert best_response_col(np.zeros((2, 3)), [0.5, 0.5]) == 0


def test_best_response_treats_near_ties_as_ties():
    # difference below the tie tolerance must not flip the choice
    payoff = np.array([[1.0, 1.0], [1.0 + 1e-14, 1.0 + 1e-14]])
    assert best_response_row(payoff, [0.5, 0.5]) == 0


def test_best_response_uniform_random_tie_rule_spreads_over_ties():
    rng = np.random.default_rng(5)
    picks = [
        best_response_row(np.zeros((3, 3)), np.ones(3) / 3, TieRule.UNIFORM_RANDOM, rng)
        for _ in range(3000)
    ]
    counts = np.bincount(picks, minlength=3)
    assert counts.min() > 0
    # 5-sigma band around the uniform expectation of 1000
    sigma = np.sqrt(3000 * (1 / 3) * (2 / 3))
    assert np.abs(counts - 1000).max() < 5 * sigma


def test_best_response_uniform_random_requires_an_rng():
    with pytest.raises(ValueError):
        best_response_row(np.zeros((2, 2)), [0.5, 0.5], TieRule.UNIFORM_RANDOM, None)
