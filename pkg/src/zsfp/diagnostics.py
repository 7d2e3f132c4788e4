"""Convergence diagnostics for learning runs.

Everything a trace reports about a belief state lives here: continuation
estimates and their per-state sum (which vanishes as play becomes zero-sum),
the zero-sum defect of the Q beliefs, a clipped Lyapunov value, the tracking
error of the estimates against the minimax values of the current beliefs,
and distances to an exact solution when one is available.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .game_core import GameSpec
from .learning import BeliefState, continuation_estimates
from .matrix_games import minimax_solve
from .planning import ShapleySolution


def default_lyapunov_lambda(discount: float) -> float:
    """Midpoint of the admissible interval (1, 1/gamma); 2.0 when gamma = 0."""
    if not (0.0 <= discount < 1.0):
        raise ValueError(f"discount must lie in [0, 1), got {discount}")
    if discount == 0.0:
        return 2.0
    return 0.5 * (1.0 + 1.0 / discount)


@dataclass
class DiagnosticsSnapshot:
    """Per-state diagnostic values for one belief state (arrays of length S).

    ``q_err_1/q_err_2/strategy_err`` are None unless a solution was supplied.
    ``q_norm_1/q_norm_2`` (max-abs of the Q beliefs per state) are included
    so boundedness of the beliefs can be checked directly from snapshots.
    """

    v_hat_1: np.ndarray
    v_hat_2: np.ndarray
    v_sum: np.ndarray
    zero_sum_defect: np.ndarray
    lyapunov: np.ndarray
    tracking_err_1: np.ndarray
    tracking_err_2: np.ndarray
    q_norm_1: np.ndarray
    q_norm_2: np.ndarray
    q_err_1: Optional[np.ndarray] = None
    q_err_2: Optional[np.ndarray] = None
    strategy_err: Optional[np.ndarray] = None


def lyapunov_value(q1, q2, pi1, pi2, lam: float) -> float:
    """Clipped Lyapunov value of one state's beliefs.

    V = max(0, h1 + h2 - lam * ||q1 + q2||_max), where h_i is player i's
    best-response payoff against the strategy beliefs (h1 over rows of q1,
    h2 over columns of q2).  Requires lam > 1; for the value to decrease
    along the dynamics lam must also satisfy gamma * lam < 1.
    """
    if not lam > 1.0:
        raise ValueError(f"lambda must exceed 1, got {lam}")
    q1 = np.asarray(q1, dtype=np.float64)
    q2 = np.asarray(q2, dtype=np.float64)
    pi1 = np.asarray(pi1, dtype=np.float64)
    pi2 = np.asarray(pi2, dtype=np.float64)
    if q1.ndim != 2 or q1.shape != q2.shape:
        raise ValueError(f"q1/q2 must be matrices of equal shape, got {q1.shape} vs {q2.shape}")
    if pi1.shape != (q1.shape[0],) or pi2.shape != (q1.shape[1],):
        raise ValueError(
            f"strategy shapes {pi1.shape}/{pi2.shape} do not match matrix {q1.shape}"
        )
    h1 = float((q1 @ pi2).max())
    h2 = float((pi1 @ q2).max())
    defect = float(np.abs(q1 + q2).max())
    return max(0.0, h1 + h2 - lam * defect)


def tracking_error(beliefs: BeliefState, state: int, player: int) -> float:
    """Continuation estimate minus the minimax value of the Q belief at a state.

    For player 1 this is never materially negative: the best response to any
    fixed column strategy earns at least the matrix's minimax value.
    """
    if player == 1:
        v = float((beliefs.q_hat_1[state] @ beliefs.pi_hat_2[state]).max())
        val = minimax_solve(beliefs.q_hat_1[state]).value
    elif player == 2:
        v = float((beliefs.pi_hat_1[state] @ beliefs.q_hat_2[state]).max())
        val = minimax_solve(np.ascontiguousarray(beliefs.q_hat_2[state].T)).value
    else:
        raise ValueError(f"player must be 1 or 2, got {player}")
    return v - val


def snapshot(
    beliefs: BeliefState,
    spec: GameSpec,
    solution: Optional[ShapleySolution] = None,
    lam: Optional[float] = None,
) -> DiagnosticsSnapshot:
    """All per-state diagnostics for one belief state (pure read).

    ``lam`` defaults to default_lyapunov_lambda(spec.discount).  Solution-
    relative fields (q_err, strategy_err) are filled only when ``solution``
    is given.
    """
    if lam is None:
        lam = default_lyapunov_lambda(spec.discount)
    n_states = spec.n_states
    values = continuation_estimates(beliefs)
    v_1, v_2 = values.v_1, values.v_2

    defect = np.abs(beliefs.q_hat_1 + beliefs.q_hat_2).max(axis=(1, 2))
    q_norm_1 = np.abs(beliefs.q_hat_1).max(axis=(1, 2))
    q_norm_2 = np.abs(beliefs.q_hat_2).max(axis=(1, 2))

    lyap = np.empty(n_states)
    terr_1 = np.empty(n_states)
    terr_2 = np.empty(n_states)
    for s in range(n_states):
        lyap[s] = lyapunov_value(
            beliefs.q_hat_1[s], beliefs.q_hat_2[s],
            beliefs.pi_hat_1[s], beliefs.pi_hat_2[s], lam,
        )
        terr_1[s] = v_1[s] - minimax_solve(beliefs.q_hat_1[s]).value
        terr_2[s] = v_2[s] - minimax_solve(
            np.ascontiguousarray(beliefs.q_hat_2[s].T)
        ).value

    q_err_1 = q_err_2 = strategy_err = None
    if solution is not None:
        q_err_1 = np.abs(beliefs.q_hat_1 - solution.q_star.q_1).max(axis=(1, 2))
        q_err_2 = np.abs(beliefs.q_hat_2 - solution.q_star.q_2).max(axis=(1, 2))
        strategy_err = np.abs(
            beliefs.pi_hat_1 - solution.equilibrium.pi_1
        ).sum(axis=1) + np.abs(beliefs.pi_hat_2 - solution.equilibrium.pi_2).sum(axis=1)

    return DiagnosticsSnapshot(
        v_hat_1=v_1,
        v_hat_2=v_2,
        v_sum=v_1 + v_2,
        zero_sum_defect=defect,
        lyapunov=lyap,
        tracking_err_1=terr_1,
        tracking_err_2=terr_2,
        q_norm_1=q_norm_1,
        q_norm_2=q_norm_2,
        q_err_1=q_err_1,
        q_err_2=q_err_2,
        strategy_err=strategy_err,
    )
