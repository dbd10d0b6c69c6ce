"""Building-block protocols composed by the plurality state machines.

Four reusable pieces live here, each as a pure step function plus (where a
statistical contract has to be validated on its own) a standalone
population driver:

* leaderless phase clock -- of two interacting clock counters, the one
  circularly behind increments modulo ``psi``;
* discrete load balancing -- floor/ceil averaging of two signed loads;
* exact majority -- synchronized cancel/double rounds on signed values
  ``sign * 2^-exp``, followed by a sign broadcast;
* junta election and the junta-driven phase counter, and on top of them a
  coin-flip leader election with round-end survival gossip.

Step functions are written initiator-first: ``u`` is the initiating agent
and the only one whose state changes unless the rule is explicitly a pair
rule (load balancing, majority, gossip exchanges).
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .rng import sm64_below, sm64_coin, sm64_mask, sample_pair_kernel

# Player opinion / majority output surface values.
POP_U = 0
POP_A = 1
POP_B = 2


# ---------------------------------------------------------------------------
# Leaderless phase clock
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def clock_is_ahead(a, b, modulus):
    """True iff ``a`` is strictly ahead of ``b`` in the circular order.

    Ahead means d = (a - b) mod modulus lies in [1, modulus/2); the
    half-window convention keeps the comparison total for bounded gaps.
    """
    d = (a - b) % modulus
    return 1 <= d < (modulus + 1) // 2


@njit(cache=True, inline="always")
def leaderless_clock_step(count_u, count_v, psi):
    """One clock-pair interaction; ties advance the initiator.

    Returns (count_u', count_v', ticked_u, ticked_v) where a tick is a
    wrap from psi-1 to 0.
    """
    if clock_is_ahead(count_v, count_u, psi) or count_u == count_v:
        count_u = (count_u + 1) % psi
        return count_u, count_v, count_u == 0, False
    count_v = (count_v + 1) % psi
    return count_u, count_v, False, count_v == 0


# ---------------------------------------------------------------------------
# Discrete load balancing
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def load_balance_step(ell_u, ell_v):
    """Split the pair sum as (floor(s/2), ceil(s/2)); conserves the sum."""
    s = ell_u + ell_v
    lo = s // 2 if s >= 0 else -((-s + 1) // 2)
    return lo, s - lo


# ---------------------------------------------------------------------------
# Exact majority (synchronized cancel/double)
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def majority_init(player_opinion):
    """Initial (sign, exp) value for a player entering a match."""
    if player_opinion == POP_A:
        return 1, 0
    if player_opinion == POP_B:
        return -1, 0
    return 0, 0


@njit(cache=True, inline="always")
def majority_round_kind(r, broadcast_from):
    """0 = idle, 1 = cancellation, 2 = doubling, 3 = broadcast."""
    if r >= broadcast_from:
        return 3
    if r <= 0:
        return 0
    if r % 2 == 1:
        return 1
    return 2


@njit(cache=True)
def majority_step(sign_u, exp_u, acted_u, sign_v, exp_v, acted_v,
                  round_signal, exp_cap, broadcast_from):
    """Pair transition of the cancel/double majority for one sub-round.

    Odd sub-rounds cancel opposite signs of equal magnitude; even
    sub-rounds split a nonzero value one exponent deeper into an undecided
    partner, at most once per agent per sub-round (``acted`` is a bit the
    caller clears at sub-round boundaries); sub-rounds at or past
    ``broadcast_from`` freeze values (outputs are handled by the caller,
    which owns the opinion surface).
    """
    kind = majority_round_kind(round_signal, broadcast_from)
    if kind == 1:
        if sign_u != 0 and sign_u == -sign_v and exp_u == exp_v:
            sign_u = 0
            exp_u = 0
            sign_v = 0
            exp_v = 0
    elif kind == 2:
        if (sign_u != 0 and sign_v == 0 and acted_u == 0 and acted_v == 0
                and exp_u < exp_cap):
            exp_u += 1
            sign_v = sign_u
            exp_v = exp_u
            acted_u = 1
            acted_v = 1
        elif (sign_v != 0 and sign_u == 0 and acted_v == 0 and acted_u == 0
                and exp_v < exp_cap):
            exp_v += 1
            sign_u = sign_v
            exp_u = exp_v
            acted_u = 1
            acted_v = 1
    return sign_u, exp_u, acted_u, sign_v, exp_v, acted_v


@njit(cache=True, inline="always")
def majority_output_pair(sign_u, out_u, sign_v, out_v, round_signal, broadcast_from):
    """Output-surface exchange during broadcast sub-rounds.

    Survivors pin their output to their sign; drained agents adopt the
    first decided output they meet.
    """
    if round_signal >= broadcast_from:
        if sign_u != 0:
            out_u = POP_A if sign_u > 0 else POP_B
        if sign_v != 0:
            out_v = POP_A if sign_v > 0 else POP_B
        if out_u == POP_U and sign_u == 0 and out_v != POP_U:
            out_u = out_v
        elif out_v == POP_U and sign_v == 0 and out_u != POP_U:
            out_v = out_u
    return out_u, out_v


def majority_schedule(m):
    """(rounds, exp_cap, broadcast_from) sized for a player population m."""
    log2m = max(1, int(np.ceil(np.log2(max(m, 2)))))
    exp_cap = log2m + 1
    rounds = 2 * exp_cap + 6
    return rounds, exp_cap, rounds - 4


@njit(cache=True)
def run_majority(m, a, b, seed, rounds, subround_len, exp_cap, broadcast_from):
    """Standalone synchronized match among ``m`` players, a of them A, b of them B.

    The sub-round index is fed externally, ``subround_len`` interactions per
    sub-round, mirroring how the composed protocol derives it from clock
    agents.  Returns (outputs_all_A, outputs_all_B, disagreement, plus_left,
    minus_left) evaluated after the last sub-round.
    """
    sign = np.zeros(m, dtype=np.int8)
    exp = np.zeros(m, dtype=np.int8)
    acted = np.zeros(m, dtype=np.int8)
    out = np.zeros(m, dtype=np.int8)
    for i in range(a):
        sign[i] = 1
        out[i] = POP_A
    for i in range(a, a + b):
        sign[i] = -1
        out[i] = POP_B
    state = np.uint64(seed)
    mask = sm64_mask(m)
    for r in range(rounds):
        acted[:] = 0
        for _ in range(subround_len):
            state, u, v = sample_pair_kernel(state, m, mask)
            su, eu, au, sv, ev, av = majority_step(
                sign[u], exp[u], acted[u], sign[v], exp[v], acted[v],
                r, exp_cap, broadcast_from)
            if su == 0 and sign[u] != 0:
                out[u] = POP_U
            if sv == 0 and sign[v] != 0:
                out[v] = POP_U
            sign[u], exp[u], acted[u] = su, eu, au
            sign[v], exp[v], acted[v] = sv, ev, av
            out[u], out[v] = majority_output_pair(
                sign[u], out[u], sign[v], out[v], r, broadcast_from)
    n_b = 0
    n_a = 0
    plus = 0
    minus = 0
    for i in range(m):
        if out[i] == POP_B:
            n_b += 1
        else:
            n_a += 1
        if sign[i] > 0:
            plus += 1
        elif sign[i] < 0:
            minus += 1
    return n_b == 0, n_a == 0, (n_b > 0 and n_a > 0), plus, minus


# ---------------------------------------------------------------------------
# Junta election and junta-driven phase counter
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def junta_step(level_u, active_u, isj_u, level_v, lmax):
    """Level-climbing step for the initiator ``u``; ``v`` is unchanged.

    Active agents climb one level when the partner is at the same or a
    higher level, deactivate when the partner is lower, and joining level
    ``lmax`` makes them junta members and inactive.
    """
    if active_u == 0:
        return level_u, active_u, isj_u
    if level_v >= level_u:
        level_u += 1
        if level_u >= lmax:
            level_u = lmax
            isj_u = 1
            active_u = 0
    else:
        active_u = 0
    return level_u, active_u, isj_u


@njit(cache=True, inline="always")
def junta_clock_step(p_u, isj_u, p_v, m, p_cap):
    """Phase-counter step for the initiator; returns (p_u', hours_crossed).

    Junta initiators push past the partner (max(p_u, p_v + 1)), others only
    catch up (max(p_u, p_v)).  The counter saturates at ``p_cap``; an hour
    is crossed each time floor(p/m) grows, and a single catch-up jump may
    cross several hours at once.
    """
    if isj_u != 0:
        p_new = max(p_u, p_v + 1)
    else:
        p_new = max(p_u, p_v)
    if p_new > p_cap:
        p_new = p_cap
    return p_new, p_new // m - p_u // m


@njit(cache=True)
def run_junta_election(x, lmax, seed, max_interactions, m, hours_tracked):
    """Standalone junta election (plus clock) on a single subpopulation.

    All ``x`` agents share one opinion, so every interaction is meaningful.
    Runs until all agents are settled (inactive or junta) and, if
    ``hours_tracked`` > 0, until the first agent crosses that many hours.
    Returns (junta_size, first_junta_t, interactions_used,
    first_hour_crossings) where the last is an array with the interaction
    index at which hour i+1 was first crossed (-1 if never).
    """
    level = np.zeros(x, dtype=np.int8)
    active = np.ones(x, dtype=np.int8)
    isj = np.zeros(x, dtype=np.int8)
    p = np.zeros(x, dtype=np.int64)
    p_cap = m * (hours_tracked + 2) if hours_tracked > 0 else m
    first_hour = np.full(hours_tracked if hours_tracked > 0 else 1, -1, dtype=np.int64)
    state = np.uint64(seed)
    mask = sm64_mask(x)
    junta_size = 0
    first_junta_t = np.int64(-1)
    n_active = x
    max_hour = 0
    t = np.int64(0)
    while t < max_interactions:
        t += 1
        state, u, v = sample_pair_kernel(state, x, mask)
        was_active = active[u]
        lu, au, ju = junta_step(level[u], active[u], isj[u], level[v], lmax)
        if ju != 0 and isj[u] == 0:
            junta_size += 1
            if first_junta_t < 0:
                first_junta_t = t
        level[u], active[u], isj[u] = lu, au, ju
        if was_active == 1 and au == 0:
            n_active -= 1
        if hours_tracked > 0:
            p_new, crossed = junta_clock_step(p[u], isj[u], p[v], m, p_cap)
            p[u] = p_new
            if crossed > 0:
                h = p_new // m
                if h > max_hour:
                    for hh in range(max_hour + 1, min(h, hours_tracked) + 1):
                        first_hour[hh - 1] = t
                    max_hour = h
        done_election = n_active == 0
        done_clock = hours_tracked == 0 or max_hour >= hours_tracked
        if done_election and done_clock:
            break
    return junta_size, first_junta_t, t, first_hour


# ---------------------------------------------------------------------------
# Leader election (coin rounds driven by a junta clock)
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def le_settle_round(contender, coin, heads_round, settled_round):
    """Round-end survival rule for one contender.

    A tails-flipper drops out only if the gossiped "someone flipped heads"
    marker reached its round; if no heads signal arrived, everyone stays
    (this keeps at least one survivor).
    """
    if contender != 0 and coin == 1 and heads_round >= settled_round:
        return 0
    return contender


@njit(cache=True)
def leader_election_step(contender_u, round_u, coin_u, heads_u, done_u,
                         new_hour, total_rounds, state):
    """Advance contender ``u`` across hour boundaries up to ``new_hour``.

    Settles every completed round, flips the coin for each newly entered
    round (heads updates the gossiped heads marker), and marks completion
    at ``total_rounds``.  Returns the updated tuple plus the rng state.
    """
    while round_u < new_hour and done_u == 0:
        contender_u = le_settle_round(contender_u, coin_u, heads_u, round_u)
        round_u += 1
        coin_u = 0
        if round_u >= total_rounds:
            done_u = 1
            break
        if contender_u != 0:
            state, h = sm64_coin(state)
            if h == 1:
                coin_u = 0
                if round_u > heads_u:
                    heads_u = round_u
            else:
                coin_u = 1
    return contender_u, round_u, coin_u, heads_u, done_u, state


@njit(cache=True)
def run_leader_election(x, seed, total_rounds, m, lmax, max_interactions):
    """Standalone leader election among ``x`` agents.

    The round structure comes from a junta clock elected within the same
    population.  Returns (leaders, survivors_per_round, first_done_t,
    interactions_used); survivors_per_round[r] is the contender count when
    the first agent finished round r.
    """
    level = np.zeros(x, dtype=np.int8)
    active = np.ones(x, dtype=np.int8)
    isj = np.zeros(x, dtype=np.int8)
    p = np.zeros(x, dtype=np.int64)
    contender = np.ones(x, dtype=np.int8)
    rnd = np.zeros(x, dtype=np.int32)
    coin = np.zeros(x, dtype=np.int8)
    heads = np.full(x, -1, dtype=np.int32)
    done = np.zeros(x, dtype=np.int8)
    p_cap = m * (total_rounds + 2)
    survivors = np.full(total_rounds + 1, -1, dtype=np.int64)
    state = np.uint64(seed)
    mask = sm64_mask(x)
    n_contenders = x
    lead_round = 0
    first_done_t = np.int64(-1)
    n_done = 0
    t = np.int64(0)
    if x == 1:
        # nothing to eliminate: the lone agent is the leader immediately
        return 1, survivors, np.int64(0), np.int64(0)
    while t < max_interactions and n_done < x:
        t += 1
        state, u, v = sample_pair_kernel(state, x, mask)
        level[u], active[u], isj[u] = junta_step(
            level[u], active[u], isj[u], level[v], lmax)
        p_new, crossed = junta_clock_step(p[u], isj[u], p[v], m, p_cap)
        p[u] = p_new
        if heads[v] > heads[u]:
            heads[u] = heads[v]
        elif heads[u] > heads[v]:
            heads[v] = heads[u]
        if crossed > 0 and done[u] == 0:
            was = contender[u]
            cu, ru, co, he, do, state = leader_election_step(
                contender[u], rnd[u], coin[u], heads[u], done[u],
                p_new // m, total_rounds, state)
            contender[u], rnd[u], coin[u], heads[u], done[u] = cu, ru, co, he, do
            if was != 0 and cu == 0:
                n_contenders -= 1
            if do != 0:
                n_done += 1
                if first_done_t < 0:
                    first_done_t = t
            if ru > lead_round:
                for rr in range(lead_round, min(ru, total_rounds)):
                    survivors[rr] = n_contenders
                lead_round = ru
    leaders = 0
    for i in range(x):
        if contender[i] != 0 and done[i] != 0:
            leaders += 1
    return leaders, survivors, first_done_t, t
