"""Exact planning oracles: policy evaluation, Shapley iteration, exploitability."""

from __future__ import annotations

import numpy as np
import pytest

from zsfp import (
    QTable,
    SolutionFormatError,
    StrategyProfile,
    best_response_value,
    exploitability,
    generate_random_game,
    load_solution,
    minimax_solve,
    policy_eval,
    save_solution,
    shapley_operator,
    shapley_value_iteration,
    uniform_profile,
    utility,
    value_of,
)
from conftest import matching_pennies, single_state, two_state_swap


def _pure_profile(spec, a1, a2):
    pi_1 = np.zeros((spec.n_states, spec.n_actions_1))
    pi_2 = np.zeros((spec.n_states, spec.n_actions_2))
    pi_1[:, a1] = 1.0
    pi_2[:, a2] = 1.0
    return StrategyProfile(pi_1, pi_2)


def test_value_of_is_the_players_own_minimax_value():
    rng = np.random.default_rng(2)
    for _ in range(20):
        m = rng.uniform(-2.0, 2.0, size=(3, 4))
        assert value_of(m, 1) == pytest.approx(minimax_solve(m).value, abs=1e-9)
        # zero-sum consistency: the opponent's value of the negated matrix
        # is the negation of the row player's value
        assert value_of(-m, 2) == pytest.approx(-value_of(m, 1), abs=1e-8)
    with pytest.raises(ValueError, match="player must be 1 or 2, got 3"):
        value_of(m, 3)


def test_policy_eval_two_state_swap(swap_spec):
    """Alternating chain with payoffs (1, 0) and gamma 1/2: v = (4/3, 2/3)."""
    values, q = policy_eval(swap_spec, uniform_profile(swap_spec))
    assert values.v_1 == pytest.approx([4.0 / 3.0, 2.0 / 3.0], abs=1e-10)
    assert values.v_2 == pytest.approx([-4.0 / 3.0, -2.0 / 3.0], abs=1e-10)
    # single-action states: Q equals the state value
    assert q.q_1[:, 0, 0] == pytest.approx(values.v_1, abs=1e-12)


def test_policy_eval_geometric_series():
    # payoff 1 at (0, 0) forever under pure (0, 0): v = 1 / (1 - 0.8) = 5
    spec = single_state([[1.0, 0.0], [0.0, 0.0]], discount=0.8)
    values, _ = policy_eval(spec, _pure_profile(spec, 0, 0))
    assert values.v_1[0] == pytest.approx(5.0, abs=1e-9)


def test_policy_eval_q_is_consistent_with_v():
    """Q = r + gamma * P v and v = pi1' Q pi2 must both hold at the solution."""
    rng = np.random.default_rng(6)
    for seed in range(5):
        spec = generate_random_game(3, 3, 0.9, seed=seed)
        pi_1 = rng.dirichlet(np.ones(3), size=3)
        pi_2 = rng.dirichlet(np.ones(3), size=3)
        profile = StrategyProfile(pi_1, pi_2)
        values, q = policy_eval(spec, profile)
        cont = np.einsum("smnt,t->smn", spec.transition, values.v_1)
        assert q.q_1 == pytest.approx(spec.payoff_1 + 0.9 * cont, abs=1e-9)
        v_back = np.einsum("sm,smn,sn->s", pi_1, q.q_1, pi_2)
        assert v_back == pytest.approx(values.v_1, abs=1e-9)


def test_utility_weights_values_by_the_initial_distribution(swap_spec):
    u1, u2 = utility(swap_spec, uniform_profile(swap_spec))
    assert u1 == pytest.approx(1.0, abs=1e-10)  # (4/3 + 2/3) / 2
    assert u2 == pytest.approx(-1.0, abs=1e-10)


def test_shapley_operator_single_state_closed_form():
    # T(q) = R + gamma * val(q) * 1; with q = R, val(R) = 1.5 and gamma = 0.5
    spec = single_state([[3.0, 1.0], [0.0, 2.0]], discount=0.5)
    out = shapley_operator(spec, QTable(spec.payoff_1, spec.payoff_2), player=1)
    assert out == pytest.approx(spec.payoff_1 + 0.75, abs=1e-9)


def test_shapley_operator_is_a_contraction():
    rng = np.random.default_rng(8)
    spec = generate_random_game(3, 3, 0.8, seed=1)
    shape = (3, 3, 3)
    for _ in range(25):
        q = rng.uniform(-5.0, 5.0, size=shape)
        q_alt = rng.uniform(-5.0, 5.0, size=shape)
        lhs = np.abs(
            shapley_operator(spec, q, 1) - shapley_operator(spec, q_alt, 1)
        ).max()
        assert lhs <= 0.8 * np.abs(q - q_alt).max() + 1e-9


def test_shapley_iteration_single_state_closed_form():
    """Value 3 = 1.5 / (1 - 0.5); Q* = R + 1.5 entrywise."""
    spec = single_state([[3.0, 1.0], [0.0, 2.0]], discount=0.5)
    sol = shapley_value_iteration(spec)
    assert sol.v_star.v_1[0] == pytest.approx(3.0, abs=1e-8)
    assert sol.v_star.v_2[0] == pytest.approx(-3.0, abs=1e-8)
    assert sol.q_star.q_1[0] == pytest.approx([[4.5, 2.5], [1.5, 3.5]], abs=1e-8)
    assert sol.equilibrium.pi_1[0] == pytest.approx([0.5, 0.5], abs=1e-7)
    assert sol.equilibrium.pi_2[0] == pytest.approx([0.25, 0.75], abs=1e-7)
    assert sol.residual <= 1e-9


def test_shapley_iteration_at_gamma_zero_solves_each_stage_game():
    spec = generate_random_game(3, 3, 0.0, seed=5)
    sol = shapley_value_iteration(spec)
    for s in range(3):
        assert sol.v_star.v_1[s] == pytest.approx(
            minimax_solve(spec.payoff_1[s]).value, abs=1e-9
        )
    assert np.array_equal(sol.q_star.q_1, spec.payoff_1)


def test_shapley_iteration_respects_the_tolerance_argument():
    spec = generate_random_game(3, 2, 0.8, seed=2)
    loose = shapley_value_iteration(spec, tolerance=1e-4)
    tight = shapley_value_iteration(spec, tolerance=1e-12)
    assert tight.residual <= 1e-12
    assert tight.iterations > loose.iterations
    assert loose.residual <= 1e-4


def test_shapley_iteration_rejects_bad_calls():
    spec = generate_random_game(2, 2, 0.5, seed=0)
    with pytest.raises(ValueError, match="tolerance must be positive"):
        shapley_value_iteration(spec, tolerance=0.0)
    with pytest.raises(RuntimeError, match="value iteration hit max_iters=2"):
        shapley_value_iteration(spec, tolerance=1e-9, max_iters=2)


def test_best_response_value_against_a_fixed_opponent(mp_spec):
    # against the pure column e1 at gamma 0 the best row earns 1
    v = best_response_value(mp_spec, np.array([[1.0, 0.0]]), player=1)
    assert v == pytest.approx([1.0], abs=1e-12)
    # against uniform, every row earns 0
    v = best_response_value(mp_spec, np.array([[0.5, 0.5]]), player=1)
    assert v == pytest.approx([0.0], abs=1e-12)


def test_exploitability_of_a_lopsided_profile(mp_spec):
    """Uniform row play is unexploitable; pure column play gifts 1 to the row."""
    profile = StrategyProfile(np.array([[0.5, 0.5]]), np.array([[1.0, 0.0]]))
    result = exploitability(mp_spec, profile)
    assert result.gap_1 == pytest.approx([1.0], abs=1e-10)
    assert result.gap_2 == pytest.approx([0.0], abs=1e-10)
    assert result.scalar == pytest.approx(1.0, abs=1e-10)


def test_exploitability_vanishes_at_the_exact_equilibrium():
    for seed in (0, 3):
        spec = generate_random_game(3, 3, 0.8, seed=seed)
        sol = shapley_value_iteration(spec)
        assert exploitability(spec, sol.equilibrium).scalar <= 1e-6


def test_solution_round_trip():
    spec = generate_random_game(2, 2, 0.5, seed=4)
    sol = shapley_value_iteration(spec)
    text = save_solution(sol)
    assert text == save_solution(sol)  # byte-deterministic
    back = load_solution(text)
    assert back.iterations == sol.iterations
    assert back.residual == sol.residual
    assert np.array_equal(back.q_star.q_1, np.asarray(sol.q_star.q_1))
    assert np.array_equal(back.equilibrium.pi_2, np.asarray(sol.equilibrium.pi_2))


def test_load_solution_rejects_malformed_documents():
    with pytest.raises(SolutionFormatError, match="parse error at line 1"):
        load_solution("{")
    with pytest.raises(SolutionFormatError, match="top-level document must be a JSON object"):
        load_solution("3")
    with pytest.raises(SolutionFormatError, match="missing field\\(s\\): 'residual'"):
        load_solution('{"v_star": [], "q_star": [], "equilibrium": [], "iterations": 1}')
    with pytest.raises(SolutionFormatError, match="unknown field\\(s\\): 'extra'"):
        load_solution(
            '{"v_star": [[0],[0]], "q_star": [[[[0]]],[[[0]]]], '
            '"equilibrium": [[[1]],[[1]]], "residual": 0, "iterations": 1, "extra": 2}'
        )
