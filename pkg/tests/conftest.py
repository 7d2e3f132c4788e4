"""Shared builders and reference oracles for the test suite.

The specs built here are small enough to solve by hand; the grid oracle is an
independent brute-force check for the LP solver (it never calls into the
package's own minimax code).
"""

from __future__ import annotations

import functools

import numpy as np
import pytest

from zsfp import GameSpec


def matching_pennies(discount: float = 0.0) -> GameSpec:
    """Single-state matching pennies; value 0, unique uniform equilibrium."""
    payoff = np.array([[[1.0, -1.0], [-1.0, 1.0]]])
    return GameSpec(
        n_states=1,
        n_actions_1=2,
        n_actions_2=2,
        payoff_1=payoff,
        payoff_2=-payoff,
        transition=np.ones((1, 2, 2, 1)),
        discount=discount,
        initial_dist=np.array([1.0]),
    )


def single_state(payoff, discount: float = 0.0) -> GameSpec:
    """Wrap one zero-sum payoff matrix as a single-state game."""
    payoff = np.asarray(payoff, dtype=np.float64)[None, :, :]
    n1, n2 = payoff.shape[1], payoff.shape[2]
    return GameSpec(
        n_states=1,
        n_actions_1=n1,
        n_actions_2=n2,
        payoff_1=payoff,
        payoff_2=-payoff,
        transition=np.ones((1, n1, n2, 1)),
        discount=discount,
        initial_dist=np.array([1.0]),
    )


def two_state_swap() -> GameSpec:
    """Two states, one action each, deterministic swap, payoffs (1, 0), gamma 1/2.

    The chain alternates states, so the exact values are geometric series:
    v(0) = 1 + 0.5*v(1), v(1) = 0 + 0.5*v(0), giving v = (4/3, 2/3).
    """
    payoff = np.array([[[1.0]], [[0.0]]])
    transition = np.zeros((2, 1, 1, 2))
    transition[0, 0, 0, 1] = 1.0
    transition[1, 0, 0, 0] = 1.0
    return GameSpec(
        n_states=2,
        n_actions_1=1,
        n_actions_2=1,
        payoff_1=payoff,
        payoff_2=-payoff,
        transition=transition,
        discount=0.5,
        initial_dist=np.array([0.5, 0.5]),
    )


@functools.lru_cache(maxsize=8)
def _simplex_grid(n: int, steps: int) -> np.ndarray:
    """All points of the n-simplex with coordinates that are multiples of 1/steps."""
    if n == 1:
        return np.ones((1, 1))
    if n == 2:
        i = np.arange(steps + 1)
        return np.column_stack([i, steps - i]) / steps
    if n == 3:
        i, j = np.meshgrid(np.arange(steps + 1), np.arange(steps + 1), indexing="ij")
        keep = (i + j) <= steps
        i, j = i[keep], j[keep]
        return np.column_stack([i, j, steps - i - j]) / steps
    raise ValueError(f"grid oracle supports up to 3 rows, got {n}")


def grid_minimax_value(matrix, resolution: float = 1e-3) -> float:
    """Brute-force minimax value of a matrix game on a simplex grid.

    Maximizes, over row mixtures restricted to the grid, the worst-case
    column payoff.  The result undershoots the true value by at most
    (Lipschitz constant of the payoff) * (grid gap), which for 3x3 matrices
    with entries in [-3, 3] at resolution 1e-3 is below 6e-3.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    grid = _simplex_grid(matrix.shape[0], round(1.0 / resolution))
    return float((grid @ matrix).min(axis=1).max())


@pytest.fixture
def mp_spec() -> GameSpec:
    return matching_pennies()


@pytest.fixture
def swap_spec() -> GameSpec:
    return two_state_swap()
