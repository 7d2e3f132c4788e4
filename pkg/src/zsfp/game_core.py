"""Stochastic-game instances: construction, validation, generation, serialization.

A game instance couples per-state stage-payoff matrices for two players with a
joint-action transition kernel, a discount factor, and an initial state
distribution.  Instances are immutable after construction and can be round-
tripped through a JSON document format.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import _rng

#: tolerance for "sums to one" checks on probability vectors
PROB_TOL = 1e-12

#: lower bound of the uniform interval used when drawing raw transition weights
TRANSITION_FLOOR = 0.05

_SPEC_FIELDS = (
    "n_states",
    "n_actions_1",
    "n_actions_2",
    "discount",
    "zero_sum",
    "initial_dist",
    "payoff_1",
    "payoff_2",
    "transition",
)


class SpecFormatError(ValueError):
    """A game-spec document could not be parsed against the schema."""


class SpecValidationError(ValueError):
    """A structurally well-formed game spec violates an invariant."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__(
            "invalid game spec: " + "; ".join(self.violations)
        )


def _frozen(a, dtype=np.float64):
    out = np.array(a, dtype=dtype, order="C", copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class GameSpec:
    """A finite discounted two-player stochastic game.

    Attributes:
        n_states: number of states.
        n_actions_1: number of actions for player 1 (same at every state).
        n_actions_2: number of actions for player 2.
        payoff_1: array (S, A1, A2); ``payoff_1[s, m, n]`` is player 1's stage
            payoff when the joint pure action (m, n) is played at state s.
        payoff_2: array (S, A1, A2), player 2's stage payoffs in the same
            (row = player-1 action, column = player-2 action) layout.
        transition: array (S, A1, A2, S); ``transition[s, m, n]`` is the
            probability vector over successor states.
        discount: discount factor in [0, 1).
        initial_dist: probability vector (S,) over the initial state.
        zero_sum: when True, payoff_1 + payoff_2 must vanish identically.

    All arrays are copied on construction and marked read-only, so a spec can
    be shared freely across threads and runs.
    """

    n_states: int
    n_actions_1: int
    n_actions_2: int
    payoff_1: np.ndarray
    payoff_2: np.ndarray
    transition: np.ndarray
    discount: float
    initial_dist: np.ndarray
    zero_sum: bool = field(default=True)

    def __post_init__(self):
        object.__setattr__(self, "n_states", int(self.n_states))
        object.__setattr__(self, "n_actions_1", int(self.n_actions_1))
        object.__setattr__(self, "n_actions_2", int(self.n_actions_2))
        object.__setattr__(self, "discount", float(self.discount))
        object.__setattr__(self, "zero_sum", bool(self.zero_sum))
        object.__setattr__(self, "payoff_1", _frozen(self.payoff_1))
        object.__setattr__(self, "payoff_2", _frozen(self.payoff_2))
        object.__setattr__(self, "transition", _frozen(self.transition))
        object.__setattr__(self, "initial_dist", _frozen(self.initial_dist))

    def __eq__(self, other):
        if not isinstance(other, GameSpec):
            return NotImplemented
        return (
            self.n_states == other.n_states
            and self.n_actions_1 == other.n_actions_1
            and self.n_actions_2 == other.n_actions_2
            and self.discount == other.discount
            and self.zero_sum == other.zero_sum
            and np.array_equal(self.payoff_1, other.payoff_1)
            and np.array_equal(self.payoff_2, other.payoff_2)
            and np.array_equal(self.transition, other.transition)
            and np.array_equal(self.initial_dist, other.initial_dist)
        )


@dataclass
class StrategyProfile:
    """Stationary mixed strategies for both players.

    ``pi_1[s]`` is player 1's action distribution at state s (length A1),
    ``pi_2[s]`` player 2's (length A2).  Each row must lie on its simplex.
    """

    pi_1: np.ndarray
    pi_2: np.ndarray

    def __post_init__(self):
        self.pi_1 = np.array(self.pi_1, dtype=np.float64)
        self.pi_2 = np.array(self.pi_2, dtype=np.float64)


@dataclass
class QTable:
    """Per-player, per-state payoff matrices over joint actions.

    ``q_1[s]`` and ``q_2[s]`` are (A1, A2) matrices in the shared layout
    (rows = player-1 actions, columns = player-2 actions); ``q_2`` holds
    player 2's own payoffs.  Used both for exact Q-functions and for running
    belief estimates.
    """

    q_1: np.ndarray
    q_2: np.ndarray

    def __post_init__(self):
        self.q_1 = np.array(self.q_1, dtype=np.float64)
        self.q_2 = np.array(self.q_2, dtype=np.float64)

    def for_player(self, player: int) -> np.ndarray:
        if player == 1:
            return self.q_1
        if player == 2:
            return self.q_2
        raise ValueError(f"player must be 1 or 2, got {player}")


def uniform_profile(spec: GameSpec) -> StrategyProfile:
    """The profile that mixes uniformly over actions at every state."""
    return StrategyProfile(
        pi_1=np.full((spec.n_states, spec.n_actions_1), 1.0 / spec.n_actions_1),
        pi_2=np.full((spec.n_states, spec.n_actions_2), 1.0 / spec.n_actions_2),
    )


def validate_spec(spec: GameSpec) -> list:
    """Check every GameSpec invariant and report all violations found.

    Returns a list of human-readable violation strings; the list is empty if
    and only if the spec is valid.  Violations are data, not exceptions.
    """
    v = []
    S, A1, A2 = spec.n_states, spec.n_actions_1, spec.n_actions_2
    if S < 1:
        v.append(f"n_states must be positive, got {S}")
    if A1 < 1:
        v.append(f"n_actions_1 must be positive, got {A1}")
    if A2 < 1:
        v.append(f"n_actions_2 must be positive, got {A2}")
    if v:
        return v

    shape_ok = True
    for name, arr, want in (
        ("payoff_1", spec.payoff_1, (S, A1, A2)),
        ("payoff_2", spec.payoff_2, (S, A1, A2)),
        ("transition", spec.transition, (S, A1, A2, S)),
        ("initial_dist", spec.initial_dist, (S,)),
    ):
        if arr.shape != want:
            v.append(f"{name} has shape {arr.shape}, expected {want}")
            shape_ok = False
    if not shape_ok:
        return v

    if not (0.0 <= spec.discount < 1.0):
        v.append(f"discount must be in [0, 1), got {spec.discount!r}")

    for name, arr in (("payoff_1", spec.payoff_1), ("payoff_2", spec.payoff_2)):
        if not np.all(np.isfinite(arr)):
            for idx in zip(*np.nonzero(~np.isfinite(arr))):
                v.append(f"{name}{list(idx)} is not finite")

    if np.any(spec.transition < 0.0):
        for s, m, n, t in zip(*np.nonzero(spec.transition < 0.0)):
            v.append(
                f"transition[{s}][{m}][{n}][{t}] is negative: "
                f"{spec.transition[s, m, n, t]!r}"
            )
    row_sums = spec.transition.sum(axis=3)
    bad = np.abs(row_sums - 1.0) > PROB_TOL
    for s, m, n in zip(*np.nonzero(bad)):
        v.append(
            f"transition[{s}][{m}][{n}] sums to {row_sums[s, m, n]!r}, not 1"
        )

    if np.any(spec.initial_dist < 0.0):
        for (s,) in zip(*np.nonzero(spec.initial_dist < 0.0)):
            v.append(f"initial_dist[{s}] is negative: {spec.initial_dist[s]!r}")
    total = spec.initial_dist.sum()
    if abs(total - 1.0) > PROB_TOL:
        v.append(f"initial_dist sums to {total!r}, not 1")

    if spec.zero_sum:
        defect = spec.payoff_1 + spec.payoff_2
        for s, m, n in zip(*np.nonzero(defect != 0.0)):
            v.append(
                f"zero_sum spec but payoff_1[{s}][{m}][{n}] + "
                f"payoff_2[{s}][{m}][{n}] = {defect[s, m, n]!r}"
            )
    return v


def generate_random_game(
    n_states: int,
    n_actions: int,
    discount: float,
    payoff_scale: float = 1.0,
    seed: int = 0,
) -> GameSpec:
    """Draw a random zero-sum game instance, deterministically from the seed.

    Player 1's stage payoffs at state j are uniform on an interval of width
    ``payoff_scale`` whose center climbs linearly with the state index from
    ``-payoff_scale`` (first state) to ``+payoff_scale`` (last state), so
    continuation payoffs differ across states; a single-state game draws from
    ``[-payoff_scale, payoff_scale]``.  Every transition row is drawn i.i.d.
    uniform on [0.05, 1) and normalized, which makes the kernel strictly
    positive: every state is reachable from everywhere, so play visits each
    state infinitely often.  The initial distribution is uniform.

    Draw order (one Philox stream keyed by the seed): all payoff matrices in
    state order, then the transition rows in (state, action-1, action-2)
    order.  Identical arguments therefore yield bit-identical specs.
    """
    if n_states < 1:
        raise ValueError(f"n_states must be positive, got {n_states}")
    if n_actions < 1:
        raise ValueError(f"n_actions must be positive, got {n_actions}")
    if discount < 0.0:
        raise ValueError(f"discount must be >= 0, got {discount}")
    if discount >= 1.0:
        raise ValueError(f"discount must be < 1, got {discount}")
    if not payoff_scale > 0.0:
        raise ValueError(f"payoff_scale must be positive, got {payoff_scale}")

    rng = _rng.stream(seed, _rng.GAME)
    S, A = n_states, n_actions

    payoff_1 = np.empty((S, A, A))
    for j in range(S):
        if S == 1:
            lo, hi = -payoff_scale, payoff_scale
        else:
            center = payoff_scale * (2.0 * j / (S - 1) - 1.0)
            lo, hi = center - payoff_scale / 2.0, center + payoff_scale / 2.0
        payoff_1[j] = rng.uniform(lo, hi, size=(A, A))

    transition = np.empty((S, A, A, S))
    for s in range(S):
        for m in range(A):
            for n in range(A):
                raw = rng.uniform(TRANSITION_FLOOR, 1.0, size=S)
                transition[s, m, n] = raw / raw.sum()

    return GameSpec(
        n_states=S,
        n_actions_1=A,
        n_actions_2=A,
        payoff_1=payoff_1,
        payoff_2=-payoff_1,
        transition=transition,
        discount=discount,
        initial_dist=np.full(S, 1.0 / S),
        zero_sum=True,
    )


def save_spec(spec: GameSpec) -> str:
    """Serialize a spec to the JSON game-spec document format.

    ``payoff_2`` is omitted for zero-sum specs (it is reconstructed as the
    negation of ``payoff_1`` on load).  Output is byte-deterministic for a
    given spec.
    """
    doc = {
        "n_states": spec.n_states,
        "n_actions_1": spec.n_actions_1,
        "n_actions_2": spec.n_actions_2,
        "discount": spec.discount,
        "zero_sum": spec.zero_sum,
        "initial_dist": spec.initial_dist.tolist(),
        "payoff_1": spec.payoff_1.tolist(),
    }
    if not spec.zero_sum:
        doc["payoff_2"] = spec.payoff_2.tolist()
    doc["transition"] = spec.transition.tolist()
    return json.dumps(doc, indent=2) + "\n"


def _take(doc, name, kinds, kind_label):
    if name not in doc:
        raise SpecFormatError(f"missing required field: {name!r}")
    value = doc.pop(name)
    if kinds is bool:
        ok = isinstance(value, bool)
    else:
        # bool is a subclass of int; JSON true/false are not numbers here
        ok = isinstance(value, kinds) and not isinstance(value, bool)
    if not ok:
        raise SpecFormatError(
            f"field {name!r} must be {kind_label}, got {type(value).__name__}"
        )
    return value


def load_spec(text: str) -> GameSpec:
    """Parse a JSON game-spec document and validate it.

    Raises SpecFormatError for syntax/schema problems (with line or field
    context) and SpecValidationError when the parsed spec violates an
    invariant.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecFormatError(
            f"parse error at line {e.lineno}, column {e.colno}: {e.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise SpecFormatError("top-level document must be a JSON object")

    n_states = _take(doc, "n_states", int, "an integer")
    n_actions_1 = _take(doc, "n_actions_1", int, "an integer")
    n_actions_2 = _take(doc, "n_actions_2", int, "an integer")
    discount = _take(doc, "discount", (int, float), "a number")
    zero_sum = _take(doc, "zero_sum", bool, "a boolean")
    initial_dist = _take(doc, "initial_dist", list, "an array")
    payoff_1 = _take(doc, "payoff_1", list, "an array")
    if zero_sum and "payoff_2" not in doc:
        payoff_2 = None
    else:
        payoff_2 = _take(doc, "payoff_2", list, "an array")
    transition = _take(doc, "transition", list, "an array")
    if doc:
        raise SpecFormatError(
            "unknown field(s): " + ", ".join(repr(k) for k in sorted(doc))
        )

    def to_array(name, data, shape):
        try:
            arr = np.asarray(data, dtype=np.float64)
        except (TypeError, ValueError):
            raise SpecFormatError(f"field {name!r} is not a numeric array") from None
        if arr.shape != shape:
            raise SpecFormatError(
                f"field {name!r} has shape {arr.shape}, expected {shape}"
            )
        return arr

    S, A1, A2 = n_states, n_actions_1, n_actions_2
    if min(S, A1, A2) < 1:
        raise SpecValidationError(
            [f"sizes must be positive, got ({S}, {A1}, {A2})"]
        )
    p1 = to_array("payoff_1", payoff_1, (S, A1, A2))
    p2 = -p1 if payoff_2 is None else to_array("payoff_2", payoff_2, (S, A1, A2))
    spec = GameSpec(
        n_states=S,
        n_actions_1=A1,
        n_actions_2=A2,
        payoff_1=p1,
        payoff_2=p2,
        transition=to_array("transition", transition, (S, A1, A2, S)),
        discount=float(discount),
        initial_dist=to_array("initial_dist", initial_dist, (S,)),
        zero_sum=zero_sum,
    )
    violations = validate_spec(spec)
    if violations:
        raise SpecValidationError(violations)
    return spec
