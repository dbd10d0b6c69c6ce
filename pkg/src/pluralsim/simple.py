"""Transition rules of the tournament-based plurality state machine.

Each function implements one block of the agent program: initialization,
clock synchronization, tracker counting, the five tournament phases, the
final winner broadcast, and (for unordered opinions) the leader-driven
challenger/defender selection.  ``u`` is always the initiator.  Rule
guards evaluate against the phases sampled at the start of the
interaction (``pu0``/``pv0``); phase writes take effect afterwards, and
the engine performs the per-phase bookkeeping when it observes a phase
change.
"""

from __future__ import annotations

from numba import njit

from .population import (ROLE_COLLECTOR, ROLE_CLOCK, ROLE_TRACKER, ROLE_PLAYER,
                         FLAG_INITIATED, FLAG_PHASE_ACTED, FLAG_CONCL_DONE,
                         VARIANT_ORDERED, switch_role, adopt_winner)
from .rng import sm64_below
from .subprotocols import (POP_U, POP_A, POP_B, leaderless_clock_step,
                           load_balance_step, majority_step,
                           majority_output_pair, junta_step, junta_clock_step,
                           leader_election_step)

MASK3 = 3  # rejection mask for uniform role choice


@njit(cache=True, inline="always")
def phase_ahead(p_u, p_v):
    """True iff ``p_v`` is ahead of ``p_u`` in the circular phase order.

    Half-window rule on the 10-phase ring: ahead means (p_v - p_u) mod 10
    lies in [1, 5].
    """
    d = (p_v - p_u) % 10
    return 1 <= d <= 5


@njit(cache=True, inline="always")
def draw_role(state, mask3):
    state, r = sm64_below(state, 3, mask3)
    return state, r


@njit(cache=True)
def init_transition(P, u, v, pu0, pv0, variant, state, mask3):
    """Token collection and role split while both agents are uninitialized."""
    if variant == VARIANT_ORDERED and (P.flags[u] & FLAG_INITIATED) == 0:
        P.flags[u] |= FLAG_INITIATED
        if P.role[u] == ROLE_COLLECTOR and P.opinion[u] == 1:
            P.defender[u] = 1
    if pu0 == -1 and pv0 == -1:
        if (P.role[u] == ROLE_COLLECTOR and P.role[v] == ROLE_COLLECTOR
                and P.opinion[u] == P.opinion[v]
                and P.tokens[u] + P.tokens[v] <= 10):
            P.tokens[v] = P.tokens[v] + P.tokens[u]
            P.tokens[u] = 0
            state, r = draw_role(state, mask3)
            switch_role(P, u, r)
    if pu0 == -1 and pv0 == 0:
        P.phase[u] = 0
    return state


@njit(cache=True)
def clock_transition(P, u, v, pu0, pv0, psi, init_target, subround_q,
                     maj_rounds, hold_enabled):
    """Clock counting during initialization, then the leaderless phase clock.

    The match phase is held open until ``maj_rounds`` sub-round boundaries
    (one every ``subround_q`` counter steps) have passed; with hold_enabled
    the first phase 0 is held until the go signal arrives.
    """
    if pu0 == -1:
        if P.role[v] != ROLE_COLLECTOR:
            P.count[u] += 1
            if P.count[u] == init_target:
                P.phase[u] = 0
        elif P.count[u] > 0:
            P.count[u] -= 1
        return
    if pu0 >= 0 and pv0 >= 0 and P.role[v] == ROLE_CLOCK:
        old_u = P.count[u]
        cu, cv, tick_u, tick_v = leaderless_clock_step(old_u, P.count[v], psi)
        P.count[u] = cu
        P.count[v] = cv
        if cu != old_u:
            _clock_advance(P, u, pu0, cu, tick_u, subround_q, maj_rounds,
                           hold_enabled)
        else:
            _clock_advance(P, v, pv0, cv, tick_v, subround_q, maj_rounds,
                           hold_enabled)


@njit(cache=True, inline="always")
def _clock_advance(P, w, p_w, new_count, ticked, subround_q, maj_rounds,
                   hold_enabled):
    """Phase and sub-round updates for the clock whose counter moved."""
    if p_w == 6 and new_count % subround_q == 0:
        if P.match_sub[w] < maj_rounds:
            P.match_sub[w] += 1
    if not ticked:
        return
    if p_w == 6:
        if P.match_sub[w] >= maj_rounds:
            P.match_sub[w] = 0
            P.phase[w] = 7
        return
    if p_w == 0 and hold_enabled and P.go[w] == 0:
        return
    P.phase[w] = (p_w + 1) % 10


@njit(cache=True, inline="always")
def tracker_tick(P, w, k):
    """Tournament-counter increment on the tracker's first phase-0 contact."""
    if (P.flags[w] & FLAG_PHASE_ACTED) == 0:
        P.flags[w] |= FLAG_PHASE_ACTED
        if P.tc[w] <= k:
            P.tc[w] += 1


@njit(cache=True)
def tournament_transition(P, u, v, pu0, pv0, maj_exp_cap, maj_bcast_from,
                          tracker_challengers):
    """Setup, cancellation, lineup, match and conclusion phase rules.

    ``tracker_challengers`` enables the ordered variant's challenger
    detection against the tracker counter; the unordered variants replace
    it with the leader's broadcast.  Returns the opinion whose challenger
    bit was raised this interaction (0 if none) so the engine can log the
    tournament's challenger.
    """
    chal_set = 0
    if pu0 != pv0 or pu0 < 0:
        return chal_set
    p = pu0
    if p == 0:
        if (tracker_challengers
                and P.role[u] == ROLE_COLLECTOR and P.role[v] == ROLE_TRACKER
                and P.opinion[u] == P.tc[v] and P.challenger[u] == 0):
            P.challenger[u] = 1
            chal_set = P.opinion[u]
        if P.role[u] == ROLE_COLLECTOR:
            if P.defender[u] != 0:
                P.ell[u] = P.tokens[u]
            elif P.challenger[u] != 0:
                P.ell[u] = -P.tokens[u]
            else:
                P.ell[u] = 0
    elif p == 2:
        if P.role[u] == ROLE_COLLECTOR and P.role[v] == ROLE_COLLECTOR:
            lu, lv = load_balance_step(P.ell[u], P.ell[v])
            P.ell[u] = lu
            P.ell[v] = lv
    elif p == 4:
        if (P.role[u] == ROLE_COLLECTOR and P.role[v] == ROLE_PLAYER
                and P.pop[v] == POP_U):
            if P.ell[u] > 0:
                P.pop[v] = POP_A
                P.ell[u] -= 1
            elif P.ell[u] < 0:
                P.pop[v] = POP_B
                P.ell[u] += 1
    elif p == 6:
        if P.role[u] == ROLE_PLAYER and P.role[v] == ROLE_PLAYER:
            r = P.mround[u]
            if P.mround[v] > r:
                r = P.mround[v]
            if P.mround[u] != r:
                P.mround[u] = r
                P.macted[u] = 0
            if P.mround[v] != r:
                P.mround[v] = r
                P.macted[v] = 0
            su, eu, au, sv, ev, av = majority_step(
                P.msign[u], P.mexp[u], P.macted[u],
                P.msign[v], P.mexp[v], P.macted[v],
                r, maj_exp_cap, maj_bcast_from)
            if su == 0 and P.msign[u] != 0:
                P.pop[u] = POP_U
            if sv == 0 and P.msign[v] != 0:
                P.pop[v] = POP_U
            P.msign[u], P.mexp[u], P.macted[u] = su, eu, au
            P.msign[v], P.mexp[v], P.macted[v] = sv, ev, av
            ou, ov = majority_output_pair(P.msign[u], P.pop[u],
                                          P.msign[v], P.pop[v],
                                          r, maj_bcast_from)
            P.pop[u] = ou
            P.pop[v] = ov
        elif P.role[u] == ROLE_PLAYER and P.role[v] == ROLE_CLOCK:
            if P.match_sub[v] > P.mround[u]:
                P.mround[u] = P.match_sub[v]
                P.macted[u] = 0
        elif P.role[u] == ROLE_CLOCK and P.role[v] == ROLE_PLAYER:
            if P.match_sub[u] > P.mround[v]:
                P.mround[v] = P.match_sub[u]
                P.macted[v] = 0
    elif p == 8:
        if (P.role[u] == ROLE_COLLECTOR and P.role[v] == ROLE_PLAYER
                and (P.flags[u] & FLAG_CONCL_DONE) == 0):
            P.flags[u] |= FLAG_CONCL_DONE
            if P.pop[v] == POP_B:
                was_def = P.defender[u]
                P.defender[u] = P.challenger[u]
                P.challenger[u] = 0
                if was_def != 0 and P.defender[u] == 0:
                    P.eliminated[u] = 1
            else:
                if P.challenger[u] != 0:
                    P.eliminated[u] = 1
                P.challenger[u] = 0
    return chal_set


@njit(cache=True, inline="always")
def final_broadcast_trigger(P, u, v, k, variant):
    """Tracker-initiated raising of the first winner bit on a defender."""
    if P.role[u] != ROLE_TRACKER or P.role[v] != ROLE_COLLECTOR:
        return False
    if P.defender[v] == 0 or P.winner[v] != 0:
        return False
    if variant == VARIANT_ORDERED:
        if P.tc[u] != k + 1:
            return False
    else:
        if P.exhausted[u] == 0:
            return False
    P.winner[v] = 1
    P.win_op[v] = P.opinion[v]
    return True


@njit(cache=True, inline="always")
def winner_epidemic(P, u, v):
    """Two-way winner spreading; returns how many agents just converged."""
    got = 0
    if P.winner[u] == 0 and P.winner[v] != 0:
        adopt_winner(P, u, P.win_op[v])
        got += 1
    elif P.winner[v] == 0 and P.winner[u] != 0:
        adopt_winner(P, v, P.win_op[u])
        got += 1
    return got


@njit(cache=True)
def unordered_selection(P, u, v, pu0, pv0, state, le_rounds, jm, jlmax, jp_cap):
    """Leader election among trackers plus challenger/defender sampling.

    Trackers elect a junta among themselves and run coin-flip elimination
    rounds on the resulting clock.  Afterwards every tracker keeps sampling
    opinions that have not yet competed into its slot (tag 1); the unique
    leader upgrades its own slot to the decided defender (tag 3, once, which
    also releases the held clocks) or to the tournament's challenger
    (tag 2).  Decided slots spread tracker-to-tracker in the relay step.
    """
    if P.role[u] != ROLE_TRACKER or pu0 < 0:
        return state
    if P.role[v] == ROLE_TRACKER and pv0 >= 0:
        # heads gossip flows both ways even for settled agents
        if P.lheads[v] > P.lheads[u]:
            P.lheads[u] = P.lheads[v]
        elif P.lheads[u] > P.lheads[v]:
            P.lheads[v] = P.lheads[u]
        if P.ldone[u] == 0:
            lu, au, ju = junta_step(P.jlevel[u], P.jactive[u], P.jisj[u],
                                    P.jlevel[v], jlmax)
            P.jlevel[u], P.jactive[u], P.jisj[u] = lu, au, ju
            p_new, crossed = junta_clock_step(P.jp[u], P.jisj[u], P.jp[v],
                                              jm, jp_cap)
            P.jp[u] = p_new
            if crossed > 0:
                cu, ru, co, he, do, state = leader_election_step(
                    P.lcont[u], P.lrnd[u], P.lcoin[u], P.lheads[u],
                    P.ldone[u], p_new // jm, le_rounds, state)
                P.lcont[u], P.lrnd[u], P.lcoin[u] = cu, ru, co
                P.lheads[u], P.ldone[u] = he, do
                if do != 0 and cu != 0:
                    P.leader[u] = 1
        if P.leader[u] != 0 and P.ttag[u] == 0 and P.ttag[v] == 1:
            P.tslot[u] = P.tslot[v]
            P.ttag[u] = 1
    if (pu0 == 0 and P.ttag[u] <= 1 and P.role[v] == ROLE_COLLECTOR
            and P.tokens[v] > 0 and P.eliminated[v] == 0
            and P.defender[v] == 0 and P.winner[v] == 0
            and P.opinion[v] != 0):
        P.tslot[u] = P.opinion[v]
        P.ttag[u] = 1
    if P.leader[u] != 0 and pu0 == 0 and P.ttag[u] == 1:
        if P.ldefsel[u] == 0:
            P.ttag[u] = 3
            P.ldefsel[u] = 1
            P.go[u] = 1
        else:
            P.ttag[u] = 2
    return state


@njit(cache=True, inline="always")
def broadcast_relays(P, u, v, pu0, pv0):
    """Epidemic relays for the go signal and the decided selection slots.

    Decided slots (challenger/defender) travel tracker-to-tracker between
    phase-0 agents only, so a stale value cannot leak into the next
    tournament; collectors compare their opinion against a decided slot on
    contact with a tracker and raise their own bit.  Returns the opinion
    whose challenger bit was raised (0 if none).
    """
    if P.go[u] == 0 and P.go[v] != 0:
        P.go[u] = 1
    elif P.go[v] == 0 and P.go[u] != 0:
        P.go[v] = 1
    ru = P.role[u]
    rv = P.role[v]
    chal_set = 0
    if ru == ROLE_TRACKER and rv == ROLE_TRACKER and pu0 == 0 and pv0 == 0:
        if P.ttag[v] >= 2 and P.ttag[u] < 2:
            P.tslot[u] = P.tslot[v]
            P.ttag[u] = P.ttag[v]
            if P.ttag[u] == 3:
                P.go[u] = 1
        elif P.ttag[u] >= 2 and P.ttag[v] < 2:
            P.tslot[v] = P.tslot[u]
            P.ttag[v] = P.ttag[u]
            if P.ttag[v] == 3:
                P.go[v] = 1
    for i in range(2):
        w = u if i == 0 else v
        x = v if i == 0 else u
        pw = pu0 if i == 0 else pv0
        px = pv0 if i == 0 else pu0
        if (P.role[w] == ROLE_COLLECTOR and P.role[x] == ROLE_TRACKER
                and P.winner[w] == 0 and P.eliminated[w] == 0
                and P.tokens[w] > 0 and P.ttag[x] >= 2
                and P.opinion[w] == P.tslot[x]):
            if P.ttag[x] == 3:
                P.defender[w] = 1
            elif (pw == 0 and px == 0 and P.defender[w] == 0
                    and P.challenger[w] == 0):
                P.challenger[w] = 1
                chal_set = P.opinion[w]
    return chal_set
