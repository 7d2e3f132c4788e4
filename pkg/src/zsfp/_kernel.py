"""Compiled inner loop for fictitious-play runs.

The dynamics advance one small dense update per step, which is far too
fine-grained for array-at-a-time numpy, so the step loop is compiled once
with numba and mutates the belief arrays in place.  ``fastmath`` stays off on
purpose: the self-belief variant's exact zero-sum defect relies on IEEE
negation symmetry of mirrored floating-point expressions, which value-unsafe
reassociation would break.

Modes are passed as integers: 0 model-based, 1 self-belief, 2 model-free.
(The Minimax-Q baseline solves an LP per step and runs in plain Python, in
``learning.run``.)  Tie rules: 0 lowest index, 1 uniform-random among ties.

The caller pre-draws the random buffers per chunk with a fixed per-step
pattern (see ``learning.run``): 4 exploration uniforms per step when
epsilon > 0, 1 state-transition uniform per step, 2 tie-break uniforms per
step when the tie rule is uniform-random.
"""

import numpy as np
from numba import njit

from .matrix_games import TIE_TOL


@njit(cache=True, nogil=True)
def _pick(payoffs, tie_rule, u):
    """Index of the best payoff; ties within TIE_TOL resolved per tie_rule."""
    size = payoffs.shape[0]
    mx = payoffs[0]
    for j in range(1, size):
        if payoffs[j] > mx:
            mx = payoffs[j]
    thr = mx - TIE_TOL
    if tie_rule == 0:
        for j in range(size):
            if payoffs[j] >= thr:
                return j
        return size - 1
    count = 0
    for j in range(size):
        if payoffs[j] >= thr:
            count += 1
    k = int(u * count)
    if k >= count:
        k = count - 1
    for j in range(size):
        if payoffs[j] >= thr:
            if k == 0:
                return j
            k -= 1
    return size - 1


@njit(cache=True, nogil=True)
def _beta_of(c, rho_beta, log_damping):
    if log_damping:
        b = 1.0 / ((1.0 + c) * np.log(2.0 + c))
        return 1.0 if b > 1.0 else b
    return (1.0 + c) ** (-rho_beta)


@njit(cache=True, nogil=True)
def run_chunk(mode, tie_rule, state, n_steps,
              payoff_1, payoff_2, transition, trans_cum,
              pi_1, pi_2, q_1, q_2, state_visits, sa_visits,
              gamma, epsilon, rho_alpha, rho_beta, beta_log_damping,
              explore_draws, kernel_draws, tiebreak_draws):
    """Advance the dynamics n_steps in place; return (state, a1, a2).

    The returned actions are the ones selected at the FIRST step of the
    chunk, so the caller can attach them to the trace record it snapshots at
    the chunk boundary.  Belief arrays, visit counters, and the walk state
    are mutated; payoff/transition arrays are read-only.
    """
    n_states, n_a1, n_a2 = payoff_1.shape
    br_1 = np.empty(n_a1)
    br_2 = np.empty(n_a2)
    v_1 = np.empty(n_states)
    v_2 = np.empty(n_states)
    first_a1 = -1
    first_a2 = -1
    s = state
    for i in range(n_steps):
        # --- action selection: best response to beliefs, epsilon-greedy ---
        explore_1 = False
        explore_2 = False
        u_a1 = 0.0
        u_a2 = 0.0
        if epsilon > 0.0:
            explore_1 = explore_draws[i, 0] < epsilon
            u_a1 = explore_draws[i, 1]
            explore_2 = explore_draws[i, 2] < epsilon
            u_a2 = explore_draws[i, 3]
        u_t1 = 0.0
        u_t2 = 0.0
        if tie_rule == 1:
            u_t1 = tiebreak_draws[i, 0]
            u_t2 = tiebreak_draws[i, 1]
        if explore_1:
            a1 = int(u_a1 * n_a1)
            if a1 >= n_a1:
                a1 = n_a1 - 1
        else:
            for m in range(n_a1):
                acc = 0.0
                for n in range(n_a2):
                    acc += q_1[s, m, n] * pi_2[s, n]
                br_1[m] = acc
            a1 = _pick(br_1, tie_rule, u_t1)
        if explore_2:
            a2 = int(u_a2 * n_a2)
            if a2 >= n_a2:
                a2 = n_a2 - 1
        else:
            for n in range(n_a2):
                acc = 0.0
                for m in range(n_a1):
                    acc += pi_1[s, m] * q_2[s, m, n]
                br_2[n] = acc
            a2 = _pick(br_2, tie_rule, u_t2)
        if i == 0:
            first_a1 = a1
            first_a2 = a2

        # --- sample the successor state ---
        u = kernel_draws[i]
        s_next = 0
        while s_next < n_states - 1 and u >= trans_cum[s, a1, a2, s_next]:
            s_next += 1

        # --- continuation estimates from the beliefs as they stand now ---
        # (strategy and Q beliefs update "simultaneously": everything the Q
        # update consumes is computed before any mutation below)
        v1_next = 0.0
        v2_next = 0.0
        if mode == 0:  # model-based: best-response payoff at every state
            for t in range(n_states):
                best = -np.inf
                for m in range(n_a1):
                    acc = 0.0
                    for n in range(n_a2):
                        acc += q_1[t, m, n] * pi_2[t, n]
                    if acc > best:
                        best = acc
                v_1[t] = best
                best = -np.inf
                for n in range(n_a2):
                    acc = 0.0
                    for m in range(n_a1):
                        acc += pi_1[t, m] * q_2[t, m, n]
                    if acc > best:
                        best = acc
                v_2[t] = best
        elif mode == 1:  # self-belief: bilinear form, mirrored per player so
            # that q_2 == -q_1 is preserved bit-for-bit
            for t in range(n_states):
                acc1 = 0.0
                acc2 = 0.0
                for m in range(n_a1):
                    row1 = 0.0
                    row2 = 0.0
                    for n in range(n_a2):
                        row1 += q_1[t, m, n] * pi_2[t, n]
                        row2 += q_2[t, m, n] * pi_2[t, n]
                    acc1 += pi_1[t, m] * row1
                    acc2 += pi_1[t, m] * row2
                v_1[t] = acc1
                v_2[t] = acc2
        else:  # model-free: only the sampled successor's estimate is used
            best = -np.inf
            for m in range(n_a1):
                acc = 0.0
                for n in range(n_a2):
                    acc += q_1[s_next, m, n] * pi_2[s_next, n]
                if acc > best:
                    best = acc
            v1_next = best
            best = -np.inf
            for n in range(n_a2):
                acc = 0.0
                for m in range(n_a1):
                    acc += pi_1[s_next, m] * q_2[s_next, m, n]
                if acc > best:
                    best = acc
            v2_next = best

        # --- strategy-belief update at the visited state only ---
        c_s = state_visits[s]
        alpha = (1.0 + c_s) ** (-rho_alpha)
        for m in range(n_a1):
            e = 1.0 if m == a1 else 0.0
            pi_1[s, m] += alpha * (e - pi_1[s, m])
        for n in range(n_a2):
            e = 1.0 if n == a2 else 0.0
            pi_2[s, n] += alpha * (e - pi_2[s, n])

        # --- Q-belief update ---
        if mode == 2:
            c_sa = sa_visits[s, a1, a2]
            beta = _beta_of(c_sa, rho_beta, beta_log_damping)
            q_1[s, a1, a2] += beta * (
                payoff_1[s, a1, a2] + gamma * v1_next - q_1[s, a1, a2]
            )
            q_2[s, a1, a2] += beta * (
                payoff_2[s, a1, a2] + gamma * v2_next - q_2[s, a1, a2]
            )
        else:
            beta = _beta_of(c_s, rho_beta, beta_log_damping)
            for m in range(n_a1):
                for n in range(n_a2):
                    cont1 = 0.0
                    cont2 = 0.0
                    for t in range(n_states):
                        p = transition[s, m, n, t]
                        cont1 += v_1[t] * p
                        cont2 += v_2[t] * p
                    q_1[s, m, n] += beta * (
                        payoff_1[s, m, n] + gamma * cont1 - q_1[s, m, n]
                    )
                    q_2[s, m, n] += beta * (
                        payoff_2[s, m, n] + gamma * cont2 - q_2[s, m, n]
                    )

        state_visits[s] += 1
        sa_visits[s, a1, a2] += 1
        s = s_next
    return s, first_a1, first_a2
