"""Fictitious-play learning dynamics in two-player zero-sum stochastic games.

The package splits into a handful of layers:

- ``game_core``: game specifications (payoffs, transitions, discount),
  validation, random generation, JSON round-tripping.
- ``matrix_games``: one-shot matrix-game machinery — best responses and an
  exact minimax LP solver (dense simplex, no external dependencies).
- ``planning``: exact oracles for the stochastic game — minimax value
  iteration, policy evaluation, best-response values, exploitability.
- ``learning``: the fictitious-play dynamics themselves (model-based,
  self-belief, model-free, and a minimax-Q baseline) behind a compiled
  simulation loop.
- ``diagnostics``: per-state convergence measurements (Lyapunov value,
  zero-sum defect, tracking error) for recorded belief snapshots.
- ``cli``: the ``zsfp`` command — generate / solve / run / eval / plot.
"""

from .diagnostics import (
    DiagnosticsSnapshot,
    default_lyapunov_lambda,
    lyapunov_value,
    snapshot,
    tracking_error,
)
from .game_core import (
    GameSpec,
    QTable,
    SpecFormatError,
    SpecValidationError,
    StrategyProfile,
    generate_random_game,
    load_spec,
    save_spec,
    uniform_profile,
    validate_spec,
)
from .learning import (
    BeliefState,
    Mode,
    RunConfig,
    RunResult,
    Schedule,
    TraceRecord,
    continuation_estimates,
    init_beliefs,
    run,
    select_actions,
    update_q_minimax_baseline,
    update_q_model_based,
    update_q_model_free,
    update_strategy_beliefs,
)
from .matrix_games import (
    LPError,
    MinimaxSolution,
    TieRule,
    best_response_col,
    best_response_row,
    minimax_solve,
)
from .planning import (
    ExploitabilityResult,
    ShapleySolution,
    SolutionFormatError,
    ValueVector,
    best_response_value,
    exploitability,
    load_solution,
    policy_eval,
    save_solution,
    shapley_operator,
    shapley_value_iteration,
    utility,
    value_of,
)

__version__ = "0.1.0"

__all__ = [
    "BeliefState",
    "DiagnosticsSnapshot",
    "ExploitabilityResult",
    "GameSpec",
    "LPError",
    "MinimaxSolution",
    "Mode",
    "QTable",
    "RunConfig",
    "RunResult",
    "Schedule",
    "ShapleySolution",
    "SolutionFormatError",
    "SpecFormatError",
    "SpecValidationError",
    "StrategyProfile",
    "TieRule",
    "TraceRecord",
    "ValueVector",
    "best_response_col",
    "best_response_row",
    "best_response_value",
    "continuation_estimates",
    "default_lyapunov_lambda",
    "exploitability",
    "generate_random_game",
    "init_beliefs",
    "load_solution",
    "load_spec",
    "lyapunov_value",
    "minimax_solve",
    "policy_eval",
    "run",
    "save_solution",
    "save_spec",
    "select_actions",
    "shapley_operator",
    "shapley_value_iteration",
    "snapshot",
    "tracking_error",
    "uniform_profile",
    "update_q_minimax_baseline",
    "update_q_model_based",
    "update_q_model_free",
    "update_strategy_beliefs",
    "utility",
    "validate_spec",
    "value_of",
]
