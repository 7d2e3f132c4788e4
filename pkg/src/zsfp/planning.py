"""Exact planning oracles: policy evaluation, minimax value iteration, exploitability.

These are the ground-truth computations that learning runs are judged
against.  Policy evaluation solves the per-player linear value system
directly; the minimax Bellman operator is iterated to its unique fixed point
(it contracts with modulus gamma in the entrywise max norm); exploitability
measures how much either player gains by best-responding to a fixed profile.
"""

import json
from dataclasses import dataclass

import numpy as np

from .game_core import GameSpec, QTable, StrategyProfile
from .matrix_games import minimax_solve

#: policy_eval certifies its linear solve to this relative residual
POLICY_EVAL_RESIDUAL = 1e-10

#: sweep tolerance used by best_response_value's value iteration
BR_VALUE_TOL = 1e-9

DEFAULT_VI_TOL = 1e-9
DEFAULT_VI_MAX_ITERS = 1_000_000


class SolutionFormatError(ValueError):
    """A solution document could not be parsed against its schema."""


@dataclass
class ValueVector:
    """Per-player, per-state continuation payoffs (arrays of length S)."""

    v_1: np.ndarray
    v_2: np.ndarray

    def __post_init__(self):
        self.v_1 = np.asarray(self.v_1, dtype=np.float64)
        self.v_2 = np.asarray(self.v_2, dtype=np.float64)

    def for_player(self, player: int) -> np.ndarray:
        if player == 1:
            return self.v_1
        if player == 2:
            return self.v_2
        raise ValueError(f"player must be 1 or 2, got {player}")


@dataclass
class ShapleySolution:
    """Fixed point of the minimax Bellman operator plus its optimizers.

    ``residual`` is the entrywise max-norm distance between the returned
    ``q_star`` and one further operator application, maximized over players
    and states.
    """

    q_star: QTable
    v_star: ValueVector
    equilibrium: StrategyProfile
    iterations: int
    residual: float


@dataclass
class ExploitabilityResult:
    """Per-state best-response gains over a profile's value, per player."""

    gap_1: np.ndarray
    gap_2: np.ndarray
    scalar: float


def value_of(matrix: np.ndarray, player: int) -> float:
    """Minimax value of one state's payoff matrix from ``player``'s side.

    Player 1 maximizes over rows of its own matrix; player 2 maximizes over
    columns of its own matrix, which is the row-player problem on the
    transpose.
    """
    if player == 1:
        return minimax_solve(matrix).value
    if player == 2:
        return minimax_solve(np.ascontiguousarray(matrix.T)).value
    raise ValueError(f"player must be 1 or 2, got {player}")


def _check_profile(spec: GameSpec, profile: StrategyProfile):
    want_1 = (spec.n_states, spec.n_actions_1)
    want_2 = (spec.n_states, spec.n_actions_2)
    if profile.pi_1.shape != want_1 or profile.pi_2.shape != want_2:
        raise ValueError(
            f"profile shapes {profile.pi_1.shape}/{profile.pi_2.shape} do not "
            f"match spec {want_1}/{want_2}"
        )


def policy_eval(spec: GameSpec, profile: StrategyProfile):
    """Exact values and Q-functions of a stationary profile.

    Returns ``(ValueVector, QTable)``.  Per player, v solves the linear
    system v = r_pi + gamma * P_pi v by a direct dense solve, and Q is the
    one-step payoff plus discounted continuation.  The solve is certified to
    relative residual POLICY_EVAL_RESIDUAL.
    """
    _check_profile(spec, profile)
    pi1, pi2 = profile.pi_1, profile.pi_2
    gamma = spec.discount

    # state-to-state kernel and per-player expected stage payoffs under pi
    p_pi = np.einsum("sm,smnt,sn->st", pi1, spec.transition, pi2)
    r_pi_1 = np.einsum("sm,smn,sn->s", pi1, spec.payoff_1, pi2)
    r_pi_2 = np.einsum("sm,smn,sn->s", pi1, spec.payoff_2, pi2)

    A = np.eye(spec.n_states) - gamma * p_pi
    v_1 = np.linalg.solve(A, r_pi_1)
    v_2 = np.linalg.solve(A, r_pi_2)
    for r, v in ((r_pi_1, v_1), (r_pi_2, v_2)):
        resid = np.abs(A @ v - r).max()
        bound = POLICY_EVAL_RESIDUAL * max(np.abs(r).max(), 1e-300)
        if resid > bound:
            raise ArithmeticError(
                f"policy evaluation solve residual {resid} exceeds {bound}"
            )

    cont = np.tensordot(spec.transition, np.stack([v_1, v_2]), axes=([3], [1]))
    q_1 = spec.payoff_1 + gamma * cont[..., 0]
    q_2 = spec.payoff_2 + gamma * cont[..., 1]
    return ValueVector(v_1, v_2), QTable(q_1, q_2)


def utility(spec: GameSpec, profile: StrategyProfile):
    """Expected discounted payoff of each player from the initial distribution."""
    values, _ = policy_eval(spec, profile)
    return (
        float(spec.initial_dist @ values.v_1),
        float(spec.initial_dist @ values.v_2),
    )


def shapley_operator(spec: GameSpec, q, player: int) -> np.ndarray:
    """One application of the minimax Bellman operator for one player.

    ``q`` may be a QTable (the player's stack is taken) or a bare (S, A1, A2)
    array of that player's matrices.  The result at state s is the stage
    payoff plus gamma times the expectation over successors of the minimax
    value of ``q`` there.
    """
    stack = q.for_player(player) if isinstance(q, QTable) else np.asarray(q, float)
    if stack.shape != (spec.n_states, spec.n_actions_1, spec.n_actions_2):
        raise ValueError(
            f"q has shape {stack.shape}, expected "
            f"{(spec.n_states, spec.n_actions_1, spec.n_actions_2)}"
        )
    vals = np.array([value_of(stack[t], player) for t in range(spec.n_states)])
    payoff = spec.payoff_1 if player == 1 else spec.payoff_2
    return payoff + spec.discount * np.tensordot(spec.transition, vals, axes=([3], [0]))


def shapley_value_iteration(
    spec: GameSpec,
    tolerance: float = DEFAULT_VI_TOL,
    max_iters: int = DEFAULT_VI_MAX_ITERS,
) -> ShapleySolution:
    """Iterate the minimax Bellman operator to its unique fixed point.

    Starts from the stage payoffs and sweeps both players until the per-sweep
    max-norm change is at most tolerance * (1 - gamma) / gamma, which by the
    contraction bound puts the iterate within ``tolerance`` of the fixed
    point.  Equilibrium strategies are the minimax optimizers of player 1's
    fixed-point matrices (the column optimizer is player 2's strategy, which
    is consistent because the fixed-point matrices are exact negations).
    """
    if not spec.zero_sum:
        raise ValueError("shapley_value_iteration requires a zero-sum spec")
    if not tolerance > 0.0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    gamma = spec.discount
    S = spec.n_states
    threshold = tolerance * (1.0 - gamma) / gamma if gamma > 0.0 else tolerance

    q_1 = spec.payoff_1.copy()
    q_2 = spec.payoff_2.copy()
    iterations = 0
    while True:
        if iterations >= max_iters:
            raise RuntimeError(
                f"value iteration hit max_iters={max_iters} with last sweep "
                f"change {change!r} (threshold {threshold!r})"
            )
        vals_1 = np.array([minimax_solve(q_1[t]).value for t in range(S)])
        vals_2 = np.array(
            [minimax_solve(np.ascontiguousarray(q_2[t].T)).value for t in range(S)]
        )
        cont = np.tensordot(spec.transition, np.stack([vals_1, vals_2], axis=1), axes=([3], [0]))
        new_1 = spec.payoff_1 + gamma * cont[..., 0]
        new_2 = spec.payoff_2 + gamma * cont[..., 1]
        change = max(
            np.abs(new_1 - q_1).max(),
            np.abs(new_2 - q_2).max(),
        )
        q_1, q_2 = new_1, new_2
        iterations += 1
        if change <= threshold:
            break

    # one further (uncounted) application certifies the residual and yields
    # the fixed-point values and equilibrium strategies
    sols_1 = [minimax_solve(q_1[t]) for t in range(S)]
    v_1 = np.array([s.value for s in sols_1])
    v_2 = np.array(
        [minimax_solve(np.ascontiguousarray(q_2[t].T)).value for t in range(S)]
    )
    cont = np.tensordot(spec.transition, np.stack([v_1, v_2], axis=1), axes=([3], [0]))
    residual = max(
        np.abs(spec.payoff_1 + gamma * cont[..., 0] - q_1).max(),
        np.abs(spec.payoff_2 + gamma * cont[..., 1] - q_2).max(),
    )
    equilibrium = StrategyProfile(
        pi_1=np.stack([s.row_strategy for s in sols_1]),
        pi_2=np.stack([s.col_strategy for s in sols_1]),
    )
    return ShapleySolution(
        q_star=QTable(q_1, q_2),
        v_star=ValueVector(v_1, v_2),
        equilibrium=equilibrium,
        iterations=iterations,
        residual=float(residual),
    )


def best_response_value(spec: GameSpec, opponent_strategy: np.ndarray, player: int) -> np.ndarray:
    """Optimal value (length S) against a fixed stationary opponent strategy.

    Fixing the opponent reduces the game to a single-agent control problem,
    solved by value iteration with the contraction-derived stopping rule.
    """
    gamma = spec.discount
    opp = np.asarray(opponent_strategy, dtype=np.float64)
    if player == 1:
        if opp.shape != (spec.n_states, spec.n_actions_2):
            raise ValueError(f"opponent strategy shape {opp.shape} does not match spec")
        r = np.einsum("smn,sn->sm", spec.payoff_1, opp)
        p = np.einsum("smnt,sn->smt", spec.transition, opp)
    elif player == 2:
        if opp.shape != (spec.n_states, spec.n_actions_1):
            raise ValueError(f"opponent strategy shape {opp.shape} does not match spec")
        r = np.einsum("smn,sm->sn", spec.payoff_2, opp)
        p = np.einsum("smnt,sm->snt", spec.transition, opp)
    else:
        raise ValueError(f"player must be 1 or 2, got {player}")

    threshold = BR_VALUE_TOL * (1.0 - gamma) / gamma if gamma > 0.0 else BR_VALUE_TOL
    v = np.zeros(spec.n_states)
    for _ in range(DEFAULT_VI_MAX_ITERS):
        new_v = (r + gamma * (p @ v)).max(axis=1)
        change = np.abs(new_v - v).max()
        v = new_v
        if change <= threshold:
            return v
    raise RuntimeError("best-response value iteration failed to converge")


def exploitability(spec: GameSpec, profile: StrategyProfile) -> ExploitabilityResult:
    """How much each player could gain, per state, by abandoning the profile.

    The scalar is the largest gap over players and states; it vanishes
    exactly at an equilibrium and is never materially negative.
    """
    values, _ = policy_eval(spec, profile)
    gap_1 = best_response_value(spec, profile.pi_2, player=1) - values.v_1
    gap_2 = best_response_value(spec, profile.pi_1, player=2) - values.v_2
    return ExploitabilityResult(
        gap_1=gap_1,
        gap_2=gap_2,
        scalar=float(max(gap_1.max(), gap_2.max())),
    )


def save_solution(solution: ShapleySolution) -> str:
    """Serialize a ShapleySolution to its JSON document format."""
    doc = {
        "v_star": [solution.v_star.v_1.tolist(), solution.v_star.v_2.tolist()],
        "q_star": [solution.q_star.q_1.tolist(), solution.q_star.q_2.tolist()],
        "equilibrium": [
            solution.equilibrium.pi_1.tolist(),
            solution.equilibrium.pi_2.tolist(),
        ],
        "residual": solution.residual,
        "iterations": solution.iterations,
    }
    return json.dumps(doc, indent=2) + "\n"


def load_solution(text: str) -> ShapleySolution:
    """Parse a solution document produced by save_solution."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SolutionFormatError(
            f"parse error at line {e.lineno}, column {e.colno}: {e.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise SolutionFormatError("top-level document must be a JSON object")
    want = {"v_star", "q_star", "equilibrium", "residual", "iterations"}
    if set(doc) != want:
        missing = want - set(doc)
        unknown = set(doc) - want
        parts = []
        if missing:
            parts.append("missing field(s): " + ", ".join(sorted(repr(f) for f in missing)))
        if unknown:
            parts.append("unknown field(s): " + ", ".join(sorted(repr(f) for f in unknown)))
        raise SolutionFormatError("; ".join(parts))
    try:
        return ShapleySolution(
            q_star=QTable(np.asarray(doc["q_star"][0], float), np.asarray(doc["q_star"][1], float)),
            v_star=ValueVector(np.asarray(doc["v_star"][0], float), np.asarray(doc["v_star"][1], float)),
            equilibrium=StrategyProfile(
                np.asarray(doc["equilibrium"][0], float),
                np.asarray(doc["equilibrium"][1], float),
            ),
            iterations=int(doc["iterations"]),
            residual=float(doc["residual"]),
        )
    except (TypeError, ValueError, IndexError):
        raise SolutionFormatError("malformed solution arrays") from None
