"""Seeded random-number streams.

Every stochastic component of the package draws from a counter-based Philox
(4x64) bit generator keyed by ``(seed, stream id)``.  Keying by stream id gives
statistically independent streams from one user-facing seed, and the
counter-based design makes every draw reproducible bit-for-bit across runs and
platforms.

Stream ids used by the package:

========  =============================================================
stream    purpose
========  =============================================================
KERNEL    state-transition sampling (initial state, then one draw/step)
EXPLORE   exploration coin flips and uniform random actions
TIEBREAK  uniform-random tie breaking in best responses
GAME      random game generation
========  =============================================================
"""

import numpy as np

KERNEL = 0
EXPLORE = 1
TIEBREAK = 2
GAME = 3

_MASK64 = (1 << 64) - 1


def stream(seed: int, stream_id: int) -> np.random.Generator:
    """Return the Philox generator for ``(seed, stream_id)``."""
    key = np.array([seed & _MASK64, stream_id & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
