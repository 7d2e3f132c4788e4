"""Fictitious-play learning dynamics for two-player zero-sum stochastic games.

Both agents repeatedly best-respond to running beliefs: a strategy belief
about the opponent (updated toward the observed action at rate alpha) and a
Q-function belief about their own continuation payoffs (updated toward a
one-stage target at the slower rate beta).  Four modes are provided:

* MODEL_BASED — the learner knows payoffs and transitions; the Q target at
  the visited state averages best-response continuation estimates over
  successors, for every joint action at that state.
* SELF_BELIEF — identical, except the continuation estimate is the bilinear
  form of the beliefs (each agent also keeps a belief about itself); for
  zero-sum specs this keeps q_hat_1 + q_hat_2 = 0 exactly.
* MODEL_FREE — only the played entry moves, toward realized payoff plus the
  discounted estimate at the sampled successor (Q-learning-style).
* MINIMAX_Q — baseline: same protocol, but the continuation estimate is the
  LP minimax value of the belief matrix at the successor state.

Randomness comes from four counter-based Philox streams derived from the run
seed (see ``_rng``): KERNEL (initial state, then one uniform per step),
EXPLORE (exactly four uniforms per step when epsilon > 0: explore?/action
for each player, the action draw discarded when not exploring), TIEBREAK
(exactly two uniforms per step under the uniform-random tie rule, one per
player, discarded when that player's best response is unique or explored).
This fixed pattern makes trajectories independent of chunking/recording and
byte-reproducible across platforms.
"""

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernel
from ._rng import EXPLORE, KERNEL, TIEBREAK, stream
from .game_core import GameSpec, QTable, StrategyProfile
from .matrix_games import TieRule, best_response_col, best_response_row, minimax_solve
from .planning import ValueVector

#: strategy-belief rows may drift from exact unit sum by at most this much
SIMPLEX_TOL = 1e-12


class Mode(enum.Enum):
    """Which learning dynamics a run follows."""

    MODEL_BASED = "model-based"
    SELF_BELIEF = "self-belief"
    MODEL_FREE = "model-free"
    MINIMAX_Q = "minimax-q"


_KERNEL_MODE = {Mode.MODEL_BASED: 0, Mode.SELF_BELIEF: 1, Mode.MODEL_FREE: 2}
_TIE_INT = {TieRule.LOWEST_INDEX: 0, TieRule.UNIFORM_RANDOM: 1}


@dataclass(frozen=True)
class Schedule:
    """Step-size sequences alpha_c = (1+c)^-rho_alpha, beta_c = (1+c)^-rho_beta.

    With ``beta_log_damping`` the beta sequence is instead
    min(1, 1/((1+c) * log(2+c))) — the classical-fictitious-play pairing for
    alpha_c = 1/(1+c) — and ``beta_exponent`` only participates in the
    timescale check.  The clamp to 1 affects only c = 0.

    Construction rejects configurations that break the convergence
    assumptions: exponents outside (0, 1], or a beta sequence that does not
    vanish faster than alpha (two-timescale requirement).
    """

    alpha_exponent: float = 0.5
    beta_exponent: float = 1.0
    beta_log_damping: bool = False

    def __post_init__(self):
        for name, value in (
            ("alpha_exponent", self.alpha_exponent),
            ("beta_exponent", self.beta_exponent),
        ):
            if not (0.0 < value <= 1.0):
                raise ValueError(
                    f"Assumption 1-b: step sizes must vanish without being "
                    f"summable; {name} must lie in (0, 1], got {value}"
                )
        two_timescale = self.beta_exponent > self.alpha_exponent or (
            self.beta_exponent == self.alpha_exponent == 1.0
            and self.beta_log_damping
        )
        if not two_timescale:
            raise ValueError(
                "Assumption 1-c: Q-function beliefs must update at a slower "
                "timescale than strategy beliefs (beta_c/alpha_c -> 0); "
                "require beta_exponent > alpha_exponent, or both exponents "
                "equal to 1 with beta_log_damping"
            )

    def alpha(self, c: int) -> float:
        """Strategy-belief step size after c prior visits."""
        return (1.0 + c) ** (-self.alpha_exponent)

    def beta(self, c: int) -> float:
        """Q-belief step size after c prior visits (state or state-action)."""
        if self.beta_log_damping:
            b = 1.0 / ((1.0 + c) * math.log(2.0 + c))
            return 1.0 if b > 1.0 else b
        return (1.0 + c) ** (-self.beta_exponent)

    def square_summable_beta(self) -> bool:
        """Whether sum of beta_c^2 converges (needed by sample-based modes)."""
        return self.beta_log_damping or self.beta_exponent > 0.5


@dataclass
class RunConfig:
    """Everything a run needs besides the game and the step-size schedule.

    ``lyapunov_lambda`` is carried for diagnostics/reporting (the dynamics
    never use it); None means "derive the default from the discount".
    ``initial_profile`` / ``initial_q`` override the uniform/stage-payoff
    belief initialization, e.g. to plant an exact solution.
    """

    mode: Mode = Mode.MODEL_BASED
    steps: int = 0
    seed: int = 0
    epsilon: float = 0.0
    tie_rule: TieRule = TieRule.LOWEST_INDEX
    record_every: int = 1
    lyapunov_lambda: Optional[float] = None
    initial_profile: Optional[StrategyProfile] = None
    initial_q: Optional[QTable] = None

    def __post_init__(self):
        if not isinstance(self.mode, Mode):
            raise ValueError(f"mode must be a learning.Mode, got {self.mode!r}")
        if not isinstance(self.tie_rule, TieRule):
            raise ValueError(f"tie_rule must be a TieRule, got {self.tie_rule!r}")
        if (
            not isinstance(self.steps, (int, np.integer))
            or isinstance(self.steps, bool)
            or self.steps < 0
        ):
            raise ValueError(f"steps must be a nonnegative integer, got {self.steps!r}")
        self.steps = int(self.steps)
        if not isinstance(self.record_every, (int, np.integer)) or self.record_every < 1:
            raise ValueError(
                f"record_every must be a positive integer, got {self.record_every!r}"
            )
        self.record_every = int(self.record_every)
        if not (0.0 <= self.epsilon < 1.0):
            raise ValueError(f"epsilon must lie in [0, 1), got {self.epsilon!r}")
        if self.lyapunov_lambda is not None and not self.lyapunov_lambda > 1.0:
            raise ValueError(
                f"lambda must exceed 1 (and satisfy gamma*lambda < 1), "
                f"got {self.lyapunov_lambda!r}"
            )


@dataclass
class BeliefState:
    """Joint beliefs of both agents plus visit counters.

    pi_hat_j is the (shared) belief about player j's stationary strategy —
    both agents observe the same actions, so one copy serves both.  q_hat_i
    is player i's belief about its own Q-function.  ``state_visits[s]`` and
    ``state_action_visits[s, a1, a2]`` count completed steps taken at s and
    (s, a); the n-th visit (0-indexed) uses step sizes alpha_n / beta_n.
    """

    pi_hat_1: np.ndarray
    pi_hat_2: np.ndarray
    q_hat_1: np.ndarray
    q_hat_2: np.ndarray
    state_visits: np.ndarray
    state_action_visits: np.ndarray

    def copy(self) -> "BeliefState":
        return BeliefState(
            self.pi_hat_1.copy(),
            self.pi_hat_2.copy(),
            self.q_hat_1.copy(),
            self.q_hat_2.copy(),
            self.state_visits.copy(),
            self.state_action_visits.copy(),
        )


@dataclass
class TraceRecord:
    """State of a run when step k began (before step k's updates)."""

    k: int
    state: int
    a1: int
    a2: int
    beliefs: BeliefState


@dataclass
class RunResult:
    records: list
    beliefs: BeliefState
    final_state: int


def init_beliefs(spec: GameSpec, initial_profile=None, initial_q=None) -> BeliefState:
    """Fresh beliefs: Q set to the stage payoffs, strategies uniform.

    ``initial_profile`` / ``initial_q`` replace the defaults (validated for
    shape; strategy rows must be distributions).
    """
    if initial_profile is None:
        pi_1 = np.full((spec.n_states, spec.n_actions_1), 1.0 / spec.n_actions_1)
        pi_2 = np.full((spec.n_states, spec.n_actions_2), 1.0 / spec.n_actions_2)
    else:
        pi_1 = np.ascontiguousarray(initial_profile.pi_1, dtype=np.float64).copy()
        pi_2 = np.ascontiguousarray(initial_profile.pi_2, dtype=np.float64).copy()
        if pi_1.shape != (spec.n_states, spec.n_actions_1) or pi_2.shape != (
            spec.n_states,
            spec.n_actions_2,
        ):
            raise ValueError(
                f"initial profile shapes {pi_1.shape}/{pi_2.shape} do not match spec"
            )
        for name, pi in (("pi_1", pi_1), ("pi_2", pi_2)):
            if pi.min() < -1e-9 or np.abs(pi.sum(axis=1) - 1.0).max() > 1e-9:
                raise ValueError(f"initial {name} rows must be probability vectors")
    if initial_q is None:
        q_1 = spec.payoff_1.copy()
        q_2 = spec.payoff_2.copy()
    else:
        q_1 = np.ascontiguousarray(initial_q.q_1, dtype=np.float64).copy()
        q_2 = np.ascontiguousarray(initial_q.q_2, dtype=np.float64).copy()
        want = (spec.n_states, spec.n_actions_1, spec.n_actions_2)
        if q_1.shape != want or q_2.shape != want:
            raise ValueError(
                f"initial q shapes {q_1.shape}/{q_2.shape} do not match spec {want}"
            )
    return BeliefState(
        pi_hat_1=pi_1,
        pi_hat_2=pi_2,
        q_hat_1=q_1,
        q_hat_2=q_2,
        state_visits=np.zeros(spec.n_states, dtype=np.int64),
        state_action_visits=np.zeros(
            (spec.n_states, spec.n_actions_1, spec.n_actions_2), dtype=np.int64
        ),
    )


def select_actions(beliefs: BeliefState, state: int, config: RunConfig, rng):
    """Joint action at ``state``: best response to beliefs, epsilon-greedy.

    When epsilon > 0, exactly four uniforms are drawn (explore?/action per
    player; the action draw is discarded when not exploring) so consumption
    does not depend on the outcomes; with epsilon = 0 nothing is drawn unless
    the uniform-random tie rule needs a draw inside best_response.
    """
    explore_1 = explore_2 = False
    u_a1 = u_a2 = 0.0
    if config.epsilon > 0.0:
        explore_1 = rng.random() < config.epsilon
        u_a1 = rng.random()
        explore_2 = rng.random() < config.epsilon
        u_a2 = rng.random()
    n_a1 = beliefs.pi_hat_1.shape[1]
    n_a2 = beliefs.pi_hat_2.shape[1]
    if explore_1:
        a1 = min(int(u_a1 * n_a1), n_a1 - 1)
    else:
        a1 = best_response_row(
            beliefs.q_hat_1[state], beliefs.pi_hat_2[state], config.tie_rule, rng
        )
    if explore_2:
        a2 = min(int(u_a2 * n_a2), n_a2 - 1)
    else:
        a2 = best_response_col(
            beliefs.q_hat_2[state], beliefs.pi_hat_1[state], config.tie_rule, rng
        )
    return a1, a2


def update_strategy_beliefs(
    beliefs: BeliefState, state: int, a1: int, a2: int, schedule: Schedule
) -> BeliefState:
    """Move both strategy beliefs at ``state`` toward the observed actions.

    pi <- pi + alpha_c(s) * (e_a - pi), using the visit count before this
    step.  In-place; other states untouched.  Returns ``beliefs``.
    """
    alpha = schedule.alpha(int(beliefs.state_visits[state]))
    row = beliefs.pi_hat_1[state]
    e = np.zeros_like(row)
    e[a1] = 1.0
    row += alpha * (e - row)
    row = beliefs.pi_hat_2[state]
    e = np.zeros_like(row)
    e[a2] = 1.0
    row += alpha * (e - row)
    return beliefs


def continuation_estimates(beliefs: BeliefState, mode: Mode = Mode.MODEL_BASED) -> ValueVector:
    """Estimated per-state continuation payoffs implied by current beliefs.

    Standard modes: each player's best-response payoff against its strategy
    belief (v_hat_i).  SELF_BELIEF: the bilinear form pi_1' Q_i pi_2 of the
    belief profile, which needs no maximization.
    """
    pi_1, pi_2 = beliefs.pi_hat_1, beliefs.pi_hat_2
    if mode is Mode.SELF_BELIEF:
        v_1 = np.einsum("sm,smn,sn->s", pi_1, beliefs.q_hat_1, pi_2)
        v_2 = np.einsum("sm,smn,sn->s", pi_1, beliefs.q_hat_2, pi_2)
    else:
        v_1 = np.einsum("smn,sn->sm", beliefs.q_hat_1, pi_2).max(axis=1)
        v_2 = np.einsum("sm,smn->sn", pi_1, beliefs.q_hat_2).max(axis=1)
    return ValueVector(v_1, v_2)


def update_q_model_based(
    beliefs: BeliefState,
    spec: GameSpec,
    state: int,
    schedule: Schedule,
    values: Optional[ValueVector] = None,
    allow_general_sum: bool = False,
) -> BeliefState:
    """Move every Q entry at ``state`` toward its model-based one-stage target.

    Target for joint action a: r_i(s,a) + gamma * sum_t v_i(t) p(t|s,a), with
    the continuation estimates ``values`` taken from the beliefs before any
    of this step's mutations (pass them in when combining with the strategy
    update; computed here otherwise).  Step size beta_c(s), pre-step count.
    """
    if not spec.zero_sum and not allow_general_sum:
        raise ValueError(
            "model-based update expects a zero-sum spec; "
            "pass allow_general_sum=True to override"
        )
    if values is None:
        values = continuation_estimates(beliefs)
    beta = schedule.beta(int(beliefs.state_visits[state]))
    gamma = spec.discount
    cont = np.tensordot(
        spec.transition[state], np.stack([values.v_1, values.v_2], axis=1), axes=([2], [0])
    )
    for q, payoff, v in (
        (beliefs.q_hat_1, spec.payoff_1, cont[..., 0]),
        (beliefs.q_hat_2, spec.payoff_2, cont[..., 1]),
    ):
        q[state] += beta * (payoff[state] + gamma * v - q[state])
    return beliefs


def update_q_model_free(
    beliefs: BeliefState,
    state: int,
    a1: int,
    a2: int,
    payoffs,
    next_state: int,
    schedule: Schedule,
    discount: float,
    values: Optional[ValueVector] = None,
) -> BeliefState:
    """Move only the played (state, a1, a2) entry toward its sampled target.

    Target: realized payoff + gamma * v_hat_i(next_state), with v_hat from the
    pre-update beliefs; step size beta_c(s,a) on the joint-action counter.
    """
    if values is None:
        values = continuation_estimates(beliefs)
    beta = schedule.beta(int(beliefs.state_action_visits[state, a1, a2]))
    r_1, r_2 = payoffs
    beliefs.q_hat_1[state, a1, a2] += beta * (
        r_1 + discount * values.v_1[next_state] - beliefs.q_hat_1[state, a1, a2]
    )
    beliefs.q_hat_2[state, a1, a2] += beta * (
        r_2 + discount * values.v_2[next_state] - beliefs.q_hat_2[state, a1, a2]
    )
    return beliefs


def update_q_minimax_baseline(
    beliefs: BeliefState,
    state: int,
    a1: Optional[int] = None,
    a2: Optional[int] = None,
    payoffs=None,
    next_state: Optional[int] = None,
    *,
    schedule: Schedule,
    discount: Optional[float] = None,
    spec: Optional[GameSpec] = None,
) -> BeliefState:
    """Minimax-Q backup: the continuation estimate is the LP value of Q_hat.

    Default (model-free) flavor mirrors update_q_model_free with
    v_i(next_state) replaced by val_i(q_hat_i[next_state]).  Passing ``spec``
    switches to the model-based flavor: every entry at ``state`` moves toward
    r_i(s,a) + gamma * sum_t val_i(q_hat_i[t]) p(t|s,a) with step size
    beta_c(s) — iterated synchronously over all states this is damped minimax
    value iteration.  Strategy beliefs are not consulted by either flavor.
    """
    if spec is not None:
        vals_1 = np.array(
            [minimax_solve(beliefs.q_hat_1[t]).value for t in range(spec.n_states)]
        )
        vals_2 = np.array(
            [
                minimax_solve(np.ascontiguousarray(beliefs.q_hat_2[t].T)).value
                for t in range(spec.n_states)
            ]
        )
        return update_q_model_based(
            beliefs,
            spec,
            state,
            schedule,
            values=ValueVector(vals_1, vals_2),
            allow_general_sum=True,
        )
    if a1 is None or a2 is None or payoffs is None or next_state is None or discount is None:
        raise ValueError(
            "model-free Minimax-Q update needs a1, a2, payoffs, next_state, discount"
        )
    val_1 = minimax_solve(beliefs.q_hat_1[next_state]).value
    val_2 = minimax_solve(np.ascontiguousarray(beliefs.q_hat_2[next_state].T)).value
    values = ValueVector(
        np.full(beliefs.q_hat_1.shape[0], val_1),
        np.full(beliefs.q_hat_1.shape[0], val_2),
    )
    return update_q_model_free(
        beliefs, state, a1, a2, payoffs, next_state, schedule, discount, values=values
    )


def _pick_py(payoffs: np.ndarray, tie_rule_int: int, u: float) -> int:
    """Python mirror of the kernel's tie-handling argmax (same draws)."""
    mx = float(payoffs.max())
    thr = mx - 1e-12
    tied = np.flatnonzero(payoffs >= thr)
    if tie_rule_int == 0:
        return int(tied[0])
    k = min(int(u * tied.size), tied.size - 1)
    return int(tied[k])


def _minimax_q_chunk(
    spec, beliefs, schedule, state, n_steps, epsilon, tie_rule_int,
    trans_cum, explore_draws, kernel_draws, tiebreak_draws,
):
    """Plain-Python chunk for MINIMAX_Q: one LP per player per step."""
    gamma = spec.discount
    first_a1 = first_a2 = -1
    s = state
    for i in range(n_steps):
        explore_1 = explore_2 = False
        u_a1 = u_a2 = 0.0
        if epsilon > 0.0:
            explore_1 = explore_draws[i, 0] < epsilon
            u_a1 = explore_draws[i, 1]
            explore_2 = explore_draws[i, 2] < epsilon
            u_a2 = explore_draws[i, 3]
        u_t1 = u_t2 = 0.0
        if tie_rule_int == 1:
            u_t1 = tiebreak_draws[i, 0]
            u_t2 = tiebreak_draws[i, 1]
        if explore_1:
            a1 = min(int(u_a1 * spec.n_actions_1), spec.n_actions_1 - 1)
        else:
            a1 = _pick_py(beliefs.q_hat_1[s] @ beliefs.pi_hat_2[s], tie_rule_int, u_t1)
        if explore_2:
            a2 = min(int(u_a2 * spec.n_actions_2), spec.n_actions_2 - 1)
        else:
            a2 = _pick_py(beliefs.pi_hat_1[s] @ beliefs.q_hat_2[s], tie_rule_int, u_t2)
        if i == 0:
            first_a1, first_a2 = a1, a2
        s_next = int(np.searchsorted(trans_cum[s, a1, a2], kernel_draws[i], side="right"))
        if s_next >= spec.n_states:
            s_next = spec.n_states - 1
        update_strategy_beliefs(beliefs, s, a1, a2, schedule)
        update_q_minimax_baseline(
            beliefs,
            s,
            a1,
            a2,
            (float(spec.payoff_1[s, a1, a2]), float(spec.payoff_2[s, a1, a2])),
            s_next,
            schedule=schedule,
            discount=gamma,
        )
        beliefs.state_visits[s] += 1
        beliefs.state_action_visits[s, a1, a2] += 1
        s = s_next
    return s, first_a1, first_a2


def run(spec: GameSpec, config: RunConfig, schedule: Schedule) -> RunResult:
    """Simulate the learning dynamics for config.steps steps.

    Per step: select the joint action (best responses to current beliefs,
    epsilon-greedy), sample the successor, update strategy beliefs at the
    visited state, apply the mode's Q update (whose targets use the beliefs
    as they stood when the step began), then advance counters and state.
    A TraceRecord is emitted at every step index divisible by record_every,
    carrying the pre-update beliefs and the action taken there; steps = 0
    yields an empty trace with beliefs equal to init_beliefs.

    Fully deterministic given the seed; the stream layout and per-step draw
    pattern are documented in the module docstring and are independent of
    record_every.
    """
    if config.mode in (Mode.MODEL_BASED, Mode.SELF_BELIEF) and not spec.zero_sum:
        raise ValueError(
            f"{config.mode.value} runs require a zero-sum spec "
            "(use update_q_model_based(allow_general_sum=True) directly otherwise)"
        )
    if config.mode in (Mode.MODEL_FREE, Mode.MINIMAX_Q) and not schedule.square_summable_beta():
        raise ValueError(
            "Assumption 2-b: sum of squared beta must be finite; "
            f"{config.mode.value} runs require beta_exponent > 0.5, "
            f"got beta_exponent={schedule.beta_exponent}"
        )
    gamma = spec.discount
    if config.lyapunov_lambda is not None and gamma > 0.0 and not (
        config.lyapunov_lambda < 1.0 / gamma
    ):
        raise ValueError(
            f"lambda must satisfy gamma*lambda < 1; got lambda="
            f"{config.lyapunov_lambda} with discount {gamma}"
        )

    rng_kernel = stream(config.seed, KERNEL)
    rng_explore = stream(config.seed, EXPLORE)
    rng_tiebreak = stream(config.seed, TIEBREAK)
    use_explore = config.epsilon > 0.0
    use_tiebreak = config.tie_rule is TieRule.UNIFORM_RANDOM
    tie_rule_int = _TIE_INT[config.tie_rule]

    init_cum = np.cumsum(spec.initial_dist)
    state = int(np.searchsorted(init_cum, rng_kernel.random(), side="right"))
    state = min(state, spec.n_states - 1)

    beliefs = init_beliefs(
        spec, initial_profile=config.initial_profile, initial_q=config.initial_q
    )
    trans_cum = np.cumsum(spec.transition, axis=3)
    empty_4 = np.zeros((0, 4))
    empty_2 = np.zeros((0, 2))

    records = []
    k = 0
    while k < config.steps:
        chunk = min(config.record_every, config.steps - k)
        explore_draws = rng_explore.random((chunk, 4)) if use_explore else empty_4
        kernel_draws = rng_kernel.random(chunk)
        tiebreak_draws = rng_tiebreak.random((chunk, 2)) if use_tiebreak else empty_2
        snapshot = beliefs.copy()
        state_before = state
        if config.mode is Mode.MINIMAX_Q:
            state, a1, a2 = _minimax_q_chunk(
                spec, beliefs, schedule, state, chunk, config.epsilon,
                tie_rule_int, trans_cum, explore_draws, kernel_draws, tiebreak_draws,
            )
        else:
            state, a1, a2 = _kernel.run_chunk(
                _KERNEL_MODE[config.mode],
                tie_rule_int,
                state,
                chunk,
                spec.payoff_1,
                spec.payoff_2,
                spec.transition,
                trans_cum,
                beliefs.pi_hat_1,
                beliefs.pi_hat_2,
                beliefs.q_hat_1,
                beliefs.q_hat_2,
                beliefs.state_visits,
                beliefs.state_action_visits,
                gamma,
                config.epsilon,
                schedule.alpha_exponent,
                schedule.beta_exponent,
                schedule.beta_log_damping,
                explore_draws,
                kernel_draws,
                tiebreak_draws,
            )
        records.append(
            TraceRecord(k=k, state=state_before, a1=int(a1), a2=int(a2), beliefs=snapshot)
        )
        k += chunk
    return RunResult(records=records, beliefs=beliefs, final_state=int(state))
