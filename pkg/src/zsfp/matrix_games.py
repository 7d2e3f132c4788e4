"""Exact operations on zero-sum normal-form (matrix) games.

The payoff matrix convention throughout: rows index the maximizing player's
actions, columns the minimizing opponent's actions, and entries are the row
player's payoffs.  ``minimax_solve`` computes the game value and one optimal
mixed strategy per side with a self-contained dense simplex method, so results
are deterministic and carry no external-solver dependency.
"""

import enum
from dataclasses import dataclass

import numpy as np

#: payoffs within this distance of the best response payoff count as tied
TIE_TOL = 1e-12

#: simplex pivoting tolerances
_RC_TOL = 1e-11
_PIV_TOL = 1e-11

_MAX_PIVOTS_FACTOR = 500


class LPError(RuntimeError):
    """The simplex method failed to terminate; indicates a defect."""


class TieRule(enum.Enum):
    """How a best response picks among actions tied at the maximum."""

    LOWEST_INDEX = "lowest-index"
    UNIFORM_RANDOM = "uniform-random"


@dataclass
class MinimaxSolution:
    """Value and optimal mixed strategies of a matrix game.

    ``value`` equals both the max-min and the min-max payoff (strong duality);
    ``row_strategy`` guarantees at least ``value`` against every column, and
    ``col_strategy`` concedes at most ``value`` against every row.
    """

    value: float
    row_strategy: np.ndarray
    col_strategy: np.ndarray


def _as_matrix(payoff):
    M = np.asarray(payoff, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise ValueError(f"payoff must be a 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("payoff entries must be finite")
    return M


def _pick(payoffs, tie_rule, rng):
    mx = payoffs.max()
    if tie_rule is TieRule.LOWEST_INDEX:
        # first index whose payoff is within TIE_TOL of the maximum
        return int(np.argmax(payoffs >= mx - TIE_TOL))
    if tie_rule is TieRule.UNIFORM_RANDOM:
        if rng is None:
            raise ValueError("UNIFORM_RANDOM tie rule requires an rng")
        ties = np.flatnonzero(payoffs >= mx - TIE_TOL)
        return int(ties[rng.integers(ties.size)])
    raise ValueError(f"unknown tie rule: {tie_rule!r}")


def best_response_row(payoff, opponent, tie_rule=TieRule.LOWEST_INDEX, rng=None):
    """Index of a row maximizing expected payoff against a column mixture.

    Ties (within TIE_TOL of the maximum) are resolved by ``tie_rule``.  The
    choice is invariant under shifting all payoffs by a constant or scaling
    them by a positive factor.
    """
    M = _as_matrix(payoff)
    opp = np.asarray(opponent, dtype=np.float64)
    if opp.shape != (M.shape[1],):
        raise ValueError(
            f"opponent strategy has shape {opp.shape}, expected ({M.shape[1]},)"
        )
    return _pick(M @ opp, tie_rule, rng)


def best_response_col(payoff_for_col, opponent, tie_rule=TieRule.LOWEST_INDEX, rng=None):
    """Index of a column maximizing the column player's own payoff matrix.

    ``payoff_for_col`` uses the shared layout (rows = opponent actions,
    columns = own actions); ``opponent`` is the row player's mixture.
    """
    M = _as_matrix(payoff_for_col)
    opp = np.asarray(opponent, dtype=np.float64)
    if opp.shape != (M.shape[0],):
        raise ValueError(
            f"opponent strategy has shape {opp.shape}, expected ({M.shape[0]},)"
        )
    return _pick(opp @ M, tie_rule, rng)


def _pure(n, i):
    e = np.zeros(n)
    e[i] = 1.0
    return e


def _solve_simplex(M):
    """Simplex solve of max 1'u s.t. M'u <= 1, u >= 0 after a positive shift.

    Returns (value, row_strategy, col_strategy) for the original matrix.  The
    optimal u recovers the column player's minimax mixture (u / sum u) and the
    duals under the slack columns recover the row player's maximin mixture;
    the game value is 1 / sum(u) minus the shift.  Bland's rule (lowest
    eligible index for both the entering column and, on ratio ties, the
    leaving basic variable) makes the pivot sequence deterministic and
    cycle-free.
    """
    m, n = M.shape
    shift = 1.0 - M.min()
    Mp = M + shift  # all entries >= 1, so the LP is bounded and feasible

    # tableau rows: m constraints then the reduced-cost row; columns: u vars,
    # slacks, rhs
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = Mp
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = 1.0
    T[m, :n] = 1.0
    basis = np.arange(n, n + m)

    max_pivots = _MAX_PIVOTS_FACTOR * (m + n)
    for _ in range(max_pivots):
        rc = T[m, : n + m]
        eligible = np.flatnonzero(rc > _RC_TOL)
        if eligible.size == 0:
            break
        col = int(eligible[0])  # Bland: lowest index enters

        pivcol = T[:m, col]
        rows = np.flatnonzero(pivcol > _PIV_TOL)
        if rows.size == 0:
            raise LPError("unbounded tableau; this should be impossible")
        ratios = T[rows, -1] / pivcol[rows]
        best = ratios.min()
        tied = rows[ratios <= best + _PIV_TOL * (1.0 + abs(best))]
        row = int(tied[np.argmin(basis[tied])])  # Bland: lowest basic index leaves

        piv = T[row, col]
        T[row] /= piv
        colvals = T[:, col].copy()
        colvals[row] = 0.0
        T -= np.outer(colvals, T[row])
        basis[row] = col
    else:
        raise LPError(f"simplex did not terminate within {max_pivots} pivots")

    u = np.zeros(n)
    in_u = basis < n
    u[basis[in_u]] = T[:m][in_u, -1]
    u = np.maximum(u, 0.0)
    y = np.maximum(-T[m, n : n + m], 0.0)
    total = u.sum()
    if not total > 0.0:
        raise LPError("degenerate optimum with zero objective")
    return 1.0 / total - shift, y / y.sum(), u / u.sum()


def minimax_solve(payoff) -> MinimaxSolution:
    """Solve a zero-sum matrix game exactly.

    The value is min over column mixtures of the best row payoff, which by LP
    duality equals max over row mixtures of the worst column payoff.  Pure
    saddle points, single-row/column games, and fully mixed 2x2 games take
    exact closed-form paths; everything else goes through the dense simplex.
    """
    M = _as_matrix(payoff)
    m, n = M.shape

    if n == 1:
        i = int(np.argmax(M[:, 0]))
        return MinimaxSolution(float(M[i, 0]), _pure(m, i), np.ones(1))
    if m == 1:
        j = int(np.argmin(M[0]))
        return MinimaxSolution(float(M[0, j]), np.ones(1), _pure(n, j))

    # pure saddle point: max-min equals min-max over pure actions
    row_mins = M.min(axis=1)
    i = int(np.argmax(row_mins))
    col_maxs = M.max(axis=0)
    j = int(np.argmin(col_maxs))
    if row_mins[i] == col_maxs[j]:
        return MinimaxSolution(float(row_mins[i]), _pure(m, i), _pure(n, j))

    if m == 2 and n == 2:
        # no saddle point, so both players mix; the equalizer payoffs solve it
        (a, b), (c, d) = M
        denom = (a + d) - (b + c)
        scale = max(1.0, np.abs(M).max())
        if abs(denom) > 1e-6 * scale:
            value = (a * d - b * c) / denom
            row = np.array([(d - c) / denom, (a - b) / denom])
            col = np.array([(d - b) / denom, (a - c) / denom])
            return MinimaxSolution(float(value), row, col)

    value, row, col = _solve_simplex(M)
    return MinimaxSolution(float(value), row, col)
