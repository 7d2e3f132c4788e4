"""Convergence diagnostics: Lyapunov value, tracking error, snapshots."""

from __future__ import annotations

import numpy as np
import pytest

from zsfp import (
    Mode,
    RunConfig,
    Schedule,
    default_lyapunov_lambda,
    generate_random_game,
    init_beliefs,
    lyapunov_value,
    run,
    shapley_value_iteration,
    snapshot,
    tracking_error,
)
from conftest import matching_pennies


def test_default_lambda_is_the_midpoint_of_the_admissible_interval():
    assert default_lyapunov_lambda(0.8) == pytest.approx(1.125)
    assert default_lyapunov_lambda(0.5) == pytest.approx(1.5)
    assert default_lyapunov_lambda(0.0) == 2.0
    with pytest.raises(ValueError, match="discount must lie in"):
        default_lyapunov_lambda(1.0)


def test_lyapunov_value_hand_cases():
    payoff = np.array([[1.0, -1.0], [-1.0, 1.0]])
    uniform = np.array([0.5, 0.5])
    pure = np.array([1.0, 0.0])
    # uniform beliefs: both best-response payoffs are 0, no defect
    assert lyapunov_value(payoff, -payoff, uniform, uniform, 1.125) == 0.0
    # pure beliefs at the (0,0) corner: each player expects to win 1
    assert lyapunov_value(payoff, -payoff, pure, pure, 1.125) == 2.0
    # all-ones beliefs with defect 2: 1 + 1 - 1.125*2 < 0 clips to 0
    ones = np.ones((2, 2))
    assert lyapunov_value(ones, ones, uniform, uniform, 1.125) == 0.0


def test_lyapunov_value_input_validation():
    payoff = np.eye(2)
    uniform = np.array([0.5, 0.5])
    with pytest.raises(ValueError, match="lambda must exceed 1"):
        lyapunov_value(payoff, -payoff, uniform, uniform, 1.0)
    with pytest.raises(ValueError, match="matrices of equal shape"):
        lyapunov_value(payoff, np.eye(3), uniform, uniform, 1.5)
    with pytest.raises(ValueError, match="do not match matrix"):
        lyapunov_value(payoff, -payoff, np.array([1.0]), uniform, 1.5)


def test_lyapunov_value_is_symmetric_under_player_relabeling():
    """Swapping players maps (q1, q2, pi1, pi2) to (q2^T, q1^T, pi2, pi1)."""
    rng = np.random.default_rng(4)
    for _ in range(50):
        q1 = rng.uniform(-2.0, 2.0, size=(3, 2))
        q2 = rng.uniform(-2.0, 2.0, size=(3, 2))
        pi1 = rng.dirichlet(np.ones(3))
        pi2 = rng.dirichlet(np.ones(2))
        original = lyapunov_value(q1, q2, pi1, pi2, 1.2)
        relabeled = lyapunov_value(
            np.ascontiguousarray(q2.T), np.ascontiguousarray(q1.T), pi2, pi1, 1.2
        )
        assert relabeled == pytest.approx(original, abs=1e-12)


def test_lyapunov_value_without_defect_is_the_sum_of_advantages():
    """When q2 = -q1 the defect term vanishes and h1 + h2 >= 0 always holds
    (each best response earns at least the matrix value, and the values of a
    zero-sum pair cancel), so no clipping occurs."""
    rng = np.random.default_rng(9)
    for _ in range(50):
        q1 = rng.uniform(-3.0, 3.0, size=(2, 4))
        pi1 = rng.dirichlet(np.ones(2))
        pi2 = rng.dirichlet(np.ones(4))
        h1 = (q1 @ pi2).max()
        h2 = (pi1 @ -q1).max()
        assert h1 + h2 >= -1e-12
        value = lyapunov_value(q1, -q1, pi1, pi2, 1.5)
        assert value == pytest.approx(h1 + h2, abs=1e-12)


def test_tracking_error_hand_case(mp_spec):
    beliefs = init_beliefs(mp_spec)
    beliefs.q_hat_1[0] = np.eye(2)
    beliefs.pi_hat_2[0] = [1.0, 0.0]
    # best response earns 1 against the pure belief; val(I) = 0.5
    assert tracking_error(beliefs, 0, player=1) == pytest.approx(0.5, abs=1e-9)
    with pytest.raises(ValueError, match="player must be 1 or 2"):
        tracking_error(beliefs, 0, player=0)


def test_tracking_error_is_never_materially_negative():
    """A best response to any fixed mixture earns at least the minimax value."""
    rng = np.random.default_rng(14)
    spec = generate_random_game(3, 4, 0.8, seed=2)
    beliefs = init_beliefs(spec)
    for _ in range(20):
        beliefs.q_hat_1[:] = rng.uniform(-2.0, 2.0, size=beliefs.q_hat_1.shape)
        beliefs.q_hat_2[:] = rng.uniform(-2.0, 2.0, size=beliefs.q_hat_2.shape)
        beliefs.pi_hat_1[:] = rng.dirichlet(np.ones(4), size=3)
        beliefs.pi_hat_2[:] = rng.dirichlet(np.ones(4), size=3)
        for s in range(3):
            assert tracking_error(beliefs, s, player=1) >= -1e-9
            assert tracking_error(beliefs, s, player=2) >= -1e-9


def test_snapshot_shapes_and_optional_fields(mp_spec):
    beliefs = init_beliefs(mp_spec)
    snap = snapshot(beliefs, mp_spec)
    for arr in (snap.v_hat_1, snap.v_sum, snap.zero_sum_defect, snap.lyapunov,
                snap.tracking_err_1, snap.q_norm_1):
        assert arr.shape == (1,)
    assert snap.q_err_1 is None and snap.q_err_2 is None and snap.strategy_err is None
    assert snap.q_norm_1[0] == 1.0  # max |R| of matching pennies


def test_snapshot_vanishes_at_a_planted_exact_solution():
    """Beliefs set to (Q*, pi*) must score zero on every diagnostic."""
    spec = generate_random_game(3, 4, 0.8, seed=7)
    sol = shapley_value_iteration(spec)
    beliefs = init_beliefs(spec)
    beliefs.q_hat_1[:] = sol.q_star.q_1
    beliefs.q_hat_2[:] = sol.q_star.q_2
    beliefs.pi_hat_1[:] = sol.equilibrium.pi_1
    beliefs.pi_hat_2[:] = sol.equilibrium.pi_2
    snap = snapshot(beliefs, spec, solution=sol)
    assert np.abs(snap.v_sum).max() < 1e-7
    assert np.abs(snap.zero_sum_defect).max() < 1e-7
    assert np.abs(snap.tracking_err_1).max() < 1e-7
    assert np.abs(snap.lyapunov).max() < 1e-7
    assert np.abs(snap.q_err_1).max() == 0.0
    assert np.abs(snap.strategy_err).max() == 0.0


def test_snapshot_value_sum_obeys_the_decomposition_bound():
    """|v1 + v2| <= terr1 + terr2 + defect at every state: the value sums of
    the belief pair cancel up to the defect, and the rest is tracking error."""
    spec = generate_random_game(3, 4, 0.8, seed=1)
    result = run(
        spec,
        RunConfig(mode=Mode.MODEL_FREE, steps=5000, seed=5, epsilon=0.05, record_every=1000),
        Schedule(),
    )
    for record in result.records:
        snap = snapshot(record.beliefs, spec)
        bound = snap.tracking_err_1 + snap.tracking_err_2 + snap.zero_sum_defect
        assert np.all(np.abs(snap.v_sum) <= bound + 1e-9)


def test_snapshot_accepts_an_explicit_lambda(mp_spec):
    beliefs = init_beliefs(mp_spec)
    beliefs.pi_hat_1[0] = [1.0, 0.0]
    beliefs.pi_hat_2[0] = [1.0, 0.0]
    # pure corner beliefs: h1 + h2 = 2 with zero defect, any lambda
    assert snapshot(beliefs, mp_spec, lam=1.01).lyapunov[0] == pytest.approx(2.0)
