"""Sequential interaction loop shared by all protocol variants.

One call simulates one trial: uniformly random ordered pairs, the variant's
transition rules, milestone detection (first phase 0, tournament starts,
winner broadcast), periodic invariant audits, and the per-tournament
oracle scans.  Everything a trial reports is derived here so a trial is a
pure function of (configuration, seed).

``trial_kernel`` carries the per-interaction rules inlined over local
array variables: numba does not hoist namedtuple field loads or inline
array-argument helpers cheaply, and the call overhead dominates an
interaction otherwise.  The same rules exist in composable form in
:mod:`pluralsim.simple` / :mod:`pluralsim.improved`; ``reference_kernel``
below drives those directly, and the test suite pins both paths to
bit-identical trajectories.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .population import (ROLE_COLLECTOR, ROLE_CLOCK, ROLE_TRACKER, ROLE_PLAYER,
                         FLAG_INITIATED, FLAG_PHASE_ACTED, FLAG_CONCL_DONE,
                         VARIANT_ORDERED, VARIANT_IMPROVED,
                         switch_role, adopt_winner, clear_junta_fields)
from .rng import sm64_mask, sm64_below, sample_pair_kernel
from .subprotocols import (POP_U, POP_A, POP_B, majority_init,
                           leaderless_clock_step, load_balance_step,
                           majority_step, majority_output_pair, junta_step,
                           junta_clock_step, leader_election_step)
from .simple import (phase_ahead, init_transition, clock_transition,
                     tracker_tick, tournament_transition,
                     final_broadcast_trigger, winner_epidemic,
                     unordered_selection, broadcast_relays)
from .improved import modified_init_transition

# trial termination status
STATUS_CONVERGED = 0
STATUS_TIMEOUT = 1
STATUS_HORIZON = 2

# invariant-violation codes (descriptions live in engine.VIOLATION_NAMES)
V_INIT_TOKENS = 1
V_DEF_NONUNIQUE_T0 = 2
V_CHAL_WRONG = 3
V_DEF_NONUNIQUE_T2 = 4
V_ELL_SUM = 5
V_MATCH_SPLIT = 6
V_MATCH_WRONG = 7
V_LINEUP_LEFTOVER = 8
V_DEAD_FIELD = 10
V_MULTI_LEADER = 11
V_NO_LEADER = 12
V_WINNER_SPLIT = 13
V_CHAMPION = 15

VIOLATION_CAP = 128


@njit(cache=True, inline="always")
def _log_violation(viol_t, viol_code, viol_n, t, code):
    if viol_n < VIOLATION_CAP:
        viol_t[viol_n] = t
        viol_code[viol_n] = code
    return viol_n + 1


@njit(cache=True)
def _scan_flag_opinions(P, n, use_defender):
    """Unique opinion carried by defender (or challenger) collectors.

    Returns (opinion, multiple, count); opinion is 0 when no bit is set.
    """
    op = 0
    multi = False
    cnt = 0
    for i in range(n):
        if P.role[i] != ROLE_COLLECTOR:
            continue
        bit = P.defender[i] if use_defender else P.challenger[i]
        if bit != 0:
            cnt += 1
            o = P.opinion[i]
            if op == 0:
                op = o
            elif o != op:
                multi = True
    return op, multi, cnt


@njit(cache=True)
def _scan_tokens(P, n, out):
    out[:] = 0
    total = 0
    for i in range(n):
        if P.role[i] == ROLE_COLLECTOR and P.opinion[i] != 0:
            out[P.opinion[i]] += P.tokens[i]
            total += P.tokens[i]
    return total


@njit(cache=True)
def _scan_ell_sum(P, n):
    s = 0
    leftovers = 0
    for i in range(n):
        if P.role[i] == ROLE_COLLECTOR:
            s += P.ell[i]
            if P.ell[i] != 0:
                leftovers += 1
    return s, leftovers


@njit(cache=True)
def _scan_player_outputs(P, n):
    n_b = 0
    n_au = 0
    for i in range(n):
        if P.role[i] == ROLE_PLAYER:
            if P.pop[i] == POP_B:
                n_b += 1
            else:
                n_au += 1
    return n_b, n_au


@njit(cache=True)
def _scan_roles(P, n, out):
    out[:] = 0
    for i in range(n):
        out[P.role[i]] += 1


@njit(cache=True)
def _phase_gap_ok(P, n):
    """Max circular distance between any two started phases is at most 2."""
    present = np.zeros(10, dtype=np.uint8)
    any_started = False
    for i in range(n):
        if P.phase[i] >= 0:
            present[P.phase[i]] = 1
            any_started = True
    if not any_started:
        return True
    # longest run of absent positions on the ring
    best_gap = 0
    run = 0
    for j in range(20):
        if present[j % 10] == 0:
            run += 1
            if run > best_gap:
                best_gap = run
        else:
            run = 0
        if run >= 10:
            break
    spread = 10 - min(best_gap, 10)
    return spread - 1 <= 2


@njit(cache=True)
def _dead_fields_ok(P, n):
    for i in range(n):
        r = P.role[i]
        if r != ROLE_COLLECTOR:
            if (P.opinion[i] != 0 or P.tokens[i] != 0 or P.ell[i] != 0
                    or P.defender[i] != 0 or P.challenger[i] != 0
                    or P.eliminated[i] != 0):
                return False
        if r != ROLE_CLOCK:
            if P.count[i] != 0 and P.phase[i] >= 0:
                return False
            if P.match_sub[i] != 0:
                return False
        if r != ROLE_TRACKER:
            if P.tc[i] != 0 or P.ttag[i] != 0 or P.tslot[i] != 0:
                return False
        if r != ROLE_PLAYER:
            if P.pop[i] != POP_U or P.msign[i] != 0:
                return False
    return True


@njit(cache=True)
def _phase_bookkeeping(P, w, old, new, started_delta):
    """Per-agent resets when a phase variable changes; returns started delta."""
    if (P.leader[w] != 0 and old == 0 and new > 0 and P.ldefsel[w] != 0
            and P.ttag[w] == 0):
        P.exhausted[w] = 1
    P.flags[w] = P.flags[w] & 0xF9  # clear PHASE_ACTED | CONCL_DONE
    crossed0 = False
    if old < 0:
        if new >= 0:
            crossed0 = True
            started_delta += 1
    else:
        d = (new - old) % 10
        if old + d >= 10:
            crossed0 = True
    if crossed0:
        P.cycle[w] += 1
        P.tslot[w] = 0
        P.ttag[w] = 0
        if P.role[w] == ROLE_PLAYER:
            P.pop[w] = POP_U
            P.msign[w] = 0
            P.mexp[w] = 0
            P.macted[w] = 0
            P.mround[w] = 0
        if P.role[w] == ROLE_CLOCK and old < 0:
            P.count[w] = 0
    if P.role[w] == ROLE_CLOCK:
        if new == 6 or old == 6:
            P.match_sub[w] = 0
    elif P.role[w] == ROLE_PLAYER and new == 6:
        s, e = majority_init(P.pop[w])
        P.msign[w] = s
        P.mexp[w] = e
        P.macted[w] = 0
        P.mround[w] = 0
    return started_delta


@njit(cache=True)
def trial_kernel(P, variant, n, k, x0, seed,
                 psi, init_target, subround_q, maj_rounds, maj_exp_cap,
                 maj_bcast_from, le_rounds, jm, jlmax, jp_cap, phase_floor,
                 max_interactions, audit_every, horizon, max_cycles):
    """Run one trial to convergence, the interaction cap, or the horizon."""
    state = np.uint64(seed)
    mask = sm64_mask(n)
    mask3 = np.uint64(3)
    hold_enabled = variant != VARIANT_ORDERED
    ordered = variant == VARIANT_ORDERED
    improved = variant == VARIANT_IMPROVED

    # local array bindings: numba keeps these in registers, unlike repeated
    # namedtuple field loads
    role = P.role
    phase = P.phase
    count = P.count
    match_sub = P.match_sub
    tc = P.tc
    opinion = P.opinion
    tokens = P.tokens
    ell = P.ell
    defender = P.defender
    challenger = P.challenger
    eliminated = P.eliminated
    winner = P.winner
    win_op = P.win_op
    pop = P.pop
    msign = P.msign
    mexp = P.mexp
    macted = P.macted
    mround = P.mround
    flags = P.flags
    tslot = P.tslot
    ttag = P.ttag
    ldefsel = P.ldefsel
    go = P.go
    lcont = P.lcont
    lrnd = P.lrnd
    lcoin = P.lcoin
    lheads = P.lheads
    ldone = P.ldone
    leader = P.leader
    exhausted = P.exhausted
    jlevel = P.jlevel
    jactive = P.jactive
    jisj = P.jisj
    jp = P.jp
    cycle = P.cycle

    # milestones
    t_first_phase0 = np.int64(-1)
    t_phase0_all = np.int64(-1)
    t_winner_first = np.int64(-1)
    t_converged = np.int64(-1)
    t0_arr = np.full(max_cycles, -1, dtype=np.int64)
    chal_op_arr = np.zeros(max_cycles, dtype=np.int16)
    gt_def_wins = np.zeros(max_cycles, dtype=np.uint8)

    # audits
    viol_t = np.zeros(VIOLATION_CAP, dtype=np.int64)
    viol_code = np.zeros(VIOLATION_CAP, dtype=np.int16)
    viol_n = 0
    gap_bad = np.int64(0)
    snapshots = np.int64(0)
    roles_first = np.zeros(4, dtype=np.int64)
    roles_all = np.zeros(4, dtype=np.int64)
    T_hand = np.zeros(k + 1, dtype=np.int64)
    T_ref = x0.copy()
    junta_by_op = np.zeros(k + 1, dtype=np.int64)
    s0_op = np.full(k + 1, -1, dtype=np.int64)
    s1_op = np.full(k + 1, -1, dtype=np.int64)
    scratch_tokens = np.zeros(k + 1, dtype=np.int64)

    started = 0
    winners = 0
    lead_idx = np.int64(9)  # next fired position is cycle 1, phase 0
    expected_champ = 1 if ordered else 0
    status = STATUS_TIMEOUT
    winner_op = 0
    next_audit = np.int64(audit_every)

    t = np.int64(0)
    while t < max_interactions:
        if horizon > 0 and t >= horizon:
            status = STATUS_HORIZON
            break
        t += 1
        state, u, v = sample_pair_kernel(state, n, mask)
        pu0 = phase[u]
        pv0 = phase[v]
        ru0 = role[u]
        rv0 = role[v]
        chal_event = 0

        # ---- final broadcast: winner epidemic absorbs everything else ----
        if winner[u] != 0 or winner[v] != 0:
            if winner[u] == 0:
                adopt_winner(P, u, win_op[v])
                winners += 1
            elif winner[v] == 0:
                adopt_winner(P, v, win_op[u])
                winners += 1
            if winners >= n:
                wop = win_op[0]
                split = False
                for i in range(1, n):
                    if win_op[i] != wop:
                        split = True
                        break
                if split:
                    viol_n = _log_violation(viol_t, viol_code, viol_n, t,
                                            V_WINNER_SPLIT)
                    winner_op = 0
                else:
                    winner_op = wop
                status = STATUS_CONVERGED
                t_converged = t
                break
            if t >= next_audit:
                next_audit += audit_every
            continue

        # ---- final broadcast trigger: tracker raises the first winner bit
        fired = False
        if ru0 == ROLE_TRACKER and rv0 == ROLE_COLLECTOR \
                and defender[v] != 0 and winner[v] == 0:
            if (ordered and tc[u] == k + 1) or \
                    (not ordered and exhausted[u] != 0):
                winner[v] = 1
                win_op[v] = opinion[v]
                winners += 1
                if t_winner_first < 0:
                    t_winner_first = t
                fired = True

        if not fired:
            # ---- initialization --------------------------------------
            if improved:
                if pu0 < 0:
                    # per-opinion junta clock on meaningful interactions,
                    # token transfer, handoff on phase-0 contact
                    crossed_to_zero = False
                    if (ru0 == ROLE_COLLECTOR and rv0 == ROLE_COLLECTOR
                            and opinion[u] == opinion[v] and opinion[u] != 0
                            and pu0 < 0 and pv0 < 0):
                        op_u = opinion[u]
                        lu, au, ju = junta_step(jlevel[u], jactive[u],
                                                jisj[u], jlevel[v], jlmax)
                        if ju != 0 and jisj[u] == 0:
                            junta_by_op[op_u] += 1
                            if s0_op[op_u] < 0:
                                s0_op[op_u] = t
                        jlevel[u], jactive[u], jisj[u] = lu, au, ju
                        p_new, crossed = junta_clock_step(jp[u], jisj[u],
                                                          jp[v], jm, jp_cap)
                        if jp[u] < jm and p_new >= jm and s1_op[op_u] < 0:
                            s1_op[op_u] = t
                        jp[u] = p_new
                        if crossed > 0:
                            ph_u = phase[u] + crossed
                            if ph_u >= 0:
                                ph_u = 0
                                crossed_to_zero = True
                            phase[u] = ph_u
                        if tokens[u] + tokens[v] <= 10:
                            tokens[v] = tokens[v] + tokens[u]
                            tokens[u] = 0
                    if crossed_to_zero or pv0 == 0:
                        if phase[u] < 0 or crossed_to_zero:
                            if phase[u] == -phase_floor or tokens[u] == 0:
                                state, r3 = sm64_below(state, 3, mask3)
                                switch_role(P, u, r3)
                            elif role[u] == ROLE_COLLECTOR:
                                clear_junta_fields(P, u, 0)
                            phase[u] = 0
            else:
                if pu0 == -1:
                    if ordered and (flags[u] & FLAG_INITIATED) == 0:
                        flags[u] |= FLAG_INITIATED
                        if ru0 == ROLE_COLLECTOR and opinion[u] == 1:
                            defender[u] = 1
                    if pv0 == -1:
                        if (ru0 == ROLE_COLLECTOR and rv0 == ROLE_COLLECTOR
                                and opinion[u] == opinion[v]
                                and tokens[u] + tokens[v] <= 10):
                            tokens[v] = tokens[v] + tokens[u]
                            tokens[u] = 0
                            state, r3 = sm64_below(state, 3, mask3)
                            switch_role(P, u, r3)
                    elif pv0 == 0:
                        phase[u] = 0

            # ---- clock agents ----------------------------------------
            if ru0 == ROLE_CLOCK:
                if pu0 == -1:
                    if rv0 != ROLE_COLLECTOR:
                        count[u] += 1
                        if count[u] == init_target:
                            phase[u] = 0
                    elif count[u] > 0:
                        count[u] -= 1
                elif pu0 >= 0 and pv0 >= 0 and rv0 == ROLE_CLOCK:
                    old_u = count[u]
                    cu, cv, tick_u, tick_v = leaderless_clock_step(
                        old_u, count[v], psi)
                    count[u] = cu
                    count[v] = cv
                    if cu != old_u:
                        w, cw, ticked, p_w = u, cu, tick_u, pu0
                    else:
                        w, cw, ticked, p_w = v, cv, tick_v, pv0
                    if p_w == 6 and cw % subround_q == 0:
                        if match_sub[w] < maj_rounds:
                            match_sub[w] += 1
                    if ticked:
                        if p_w == 6:
                            if match_sub[w] >= maj_rounds:
                                match_sub[w] = 0
                                phase[w] = 7
                        elif not (p_w == 0 and hold_enabled and go[w] == 0):
                            phase[w] = (p_w + 1) % 10

            # ---- tracker agents --------------------------------------
            if ordered:
                if ru0 == ROLE_TRACKER and pu0 == 0 \
                        and (flags[u] & FLAG_PHASE_ACTED) == 0:
                    flags[u] |= FLAG_PHASE_ACTED
                    if tc[u] <= k:
                        tc[u] += 1
                if rv0 == ROLE_TRACKER and pv0 == 0 \
                        and (flags[v] & FLAG_PHASE_ACTED) == 0:
                    flags[v] |= FLAG_PHASE_ACTED
                    if tc[v] <= k:
                        tc[v] += 1
            else:
                # ---- leader election and challenger/defender sampling
                if ru0 == ROLE_TRACKER and pu0 >= 0:
                    if rv0 == ROLE_TRACKER and pv0 >= 0:
                        if lheads[v] > lheads[u]:
                            lheads[u] = lheads[v]
                        elif lheads[u] > lheads[v]:
                            lheads[v] = lheads[u]
                        if ldone[u] == 0:
                            lu, au, ju = junta_step(jlevel[u], jactive[u],
                                                    jisj[u], jlevel[v], jlmax)
                            jlevel[u], jactive[u], jisj[u] = lu, au, ju
                            p_new, crossed = junta_clock_step(
                                jp[u], jisj[u], jp[v], jm, jp_cap)
                            jp[u] = p_new
                            if crossed > 0:
                                cu_, rru, co, he, do, state = \
                                    leader_election_step(
                                        lcont[u], lrnd[u], lcoin[u],
                                        lheads[u], ldone[u], p_new // jm,
                                        le_rounds, state)
                                lcont[u], lrnd[u], lcoin[u] = cu_, rru, co
                                lheads[u], ldone[u] = he, do
                                if do != 0 and cu_ != 0:
                                    leader[u] = 1
                        if leader[u] != 0 and ttag[u] == 0 and ttag[v] == 1:
                            tslot[u] = tslot[v]
                            ttag[u] = 1
                    if (pu0 == 0 and ttag[u] <= 1 and rv0 == ROLE_COLLECTOR
                            and tokens[v] > 0 and eliminated[v] == 0
                            and defender[v] == 0 and winner[v] == 0
                            and opinion[v] != 0):
                        tslot[u] = opinion[v]
                        ttag[u] = 1
                    if leader[u] != 0 and pu0 == 0 and ttag[u] == 1:
                        if ldefsel[u] == 0:
                            ttag[u] = 3
                            ldefsel[u] = 1
                            go[u] = 1
                        else:
                            ttag[u] = 2

                # ---- epidemic relays (go signal, decided slots) ------
                if go[u] == 0 and go[v] != 0:
                    go[u] = 1
                elif go[v] == 0 and go[u] != 0:
                    go[v] = 1
                if (ru0 == ROLE_TRACKER and rv0 == ROLE_TRACKER
                        and pu0 == 0 and pv0 == 0):
                    if ttag[v] >= 2 and ttag[u] < 2:
                        tslot[u] = tslot[v]
                        ttag[u] = ttag[v]
                        if ttag[u] == 3:
                            go[u] = 1
                    elif ttag[u] >= 2 and ttag[v] < 2:
                        tslot[v] = tslot[u]
                        ttag[v] = ttag[u]
                        if ttag[v] == 3:
                            go[v] = 1
                for i in range(2):
                    if i == 0:
                        w, x, pw, px = u, v, pu0, pv0
                        rw, rx = ru0, rv0
                    else:
                        w, x, pw, px = v, u, pv0, pu0
                        rw, rx = rv0, ru0
                    if (rw == ROLE_COLLECTOR and rx == ROLE_TRACKER
                            and winner[w] == 0 and eliminated[w] == 0
                            and tokens[w] > 0 and ttag[x] >= 2
                            and opinion[w] == tslot[x]):
                        if ttag[x] == 3:
                            defender[w] = 1
                        elif (pw == 0 and px == 0 and defender[w] == 0
                                and challenger[w] == 0):
                            challenger[w] = 1
                            chal_event = opinion[w]

            # ---- tournament phases -----------------------------------
            if pu0 == pv0 and pu0 >= 0:
                p = pu0
                if p == 0:
                    if (ordered and ru0 == ROLE_COLLECTOR
                            and rv0 == ROLE_TRACKER and opinion[u] == tc[v]
                            and challenger[u] == 0):
                        challenger[u] = 1
                        chal_event = opinion[u]
                    if ru0 == ROLE_COLLECTOR:
                        if defender[u] != 0:
                            ell[u] = tokens[u]
                        elif challenger[u] != 0:
                            ell[u] = -tokens[u]
                        else:
                            ell[u] = 0
                elif p == 2:
                    if ru0 == ROLE_COLLECTOR and rv0 == ROLE_COLLECTOR:
                        lu, lv = load_balance_step(ell[u], ell[v])
                        ell[u] = lu
                        ell[v] = lv
                elif p == 4:
                    if (ru0 == ROLE_COLLECTOR and rv0 == ROLE_PLAYER
                            and pop[v] == POP_U):
                        if ell[u] > 0:
                            pop[v] = POP_A
                            ell[u] -= 1
                        elif ell[u] < 0:
                            pop[v] = POP_B
                            ell[u] += 1
                elif p == 6:
                    if ru0 == ROLE_PLAYER and rv0 == ROLE_PLAYER:
                        r = mround[u]
                        if mround[v] > r:
                            r = mround[v]
                        if mround[u] != r:
                            mround[u] = r
                            macted[u] = 0
                        if mround[v] != r:
                            mround[v] = r
                            macted[v] = 0
                        su, eu, au_, sv, ev, av_ = majority_step(
                            msign[u], mexp[u], macted[u],
                            msign[v], mexp[v], macted[v],
                            r, maj_exp_cap, maj_bcast_from)
                        if su == 0 and msign[u] != 0:
                            pop[u] = POP_U
                        if sv == 0 and msign[v] != 0:
                            pop[v] = POP_U
                        msign[u], mexp[u], macted[u] = su, eu, au_
                        msign[v], mexp[v], macted[v] = sv, ev, av_
                        ou, ov = majority_output_pair(
                            msign[u], pop[u], msign[v], pop[v],
                            r, maj_bcast_from)
                        pop[u] = ou
                        pop[v] = ov
                    elif ru0 == ROLE_PLAYER and rv0 == ROLE_CLOCK:
                        if match_sub[v] > mround[u]:
                            mround[u] = match_sub[v]
                            macted[u] = 0
                    elif ru0 == ROLE_CLOCK and rv0 == ROLE_PLAYER:
                        if match_sub[u] > mround[v]:
                            mround[v] = match_sub[u]
                            macted[v] = 0
                elif p == 8:
                    if (ru0 == ROLE_COLLECTOR and rv0 == ROLE_PLAYER
                            and (flags[u] & FLAG_CONCL_DONE) == 0):
                        flags[u] |= FLAG_CONCL_DONE
                        if pop[v] == POP_B:
                            was_def = defender[u]
                            defender[u] = challenger[u]
                            challenger[u] = 0
                            if was_def != 0 and defender[u] == 0:
                                eliminated[u] = 1
                        else:
                            if challenger[u] != 0:
                                eliminated[u] = 1
                            challenger[u] = 0

            # ---- one-way phase broadcast, responder to initiator; an
            # adopting clock re-anchors its counter to the new phase start
            # so its own next wrap cannot advance the phase a second time
            pu_now = phase[u]
            pv_now = phase[v]
            if pu_now >= 0 and pv_now >= 0 and phase_ahead(pu_now, pv_now):
                phase[u] = pv_now
                if role[u] == ROLE_CLOCK:
                    count[u] = 0

            if chal_event != 0:
                c = cycle[u] if opinion[u] == chal_event else cycle[v]
                if 0 <= c < max_cycles:
                    if chal_op_arr[c] == 0:
                        chal_op_arr[c] = chal_event
                    elif chal_op_arr[c] != chal_event:
                        viol_n = _log_violation(viol_t, viol_code, viol_n, t,
                                                V_CHAL_WRONG)

        # ---- phase-change bookkeeping and milestone events -----------
        for i in range(2):
            w = u if i == 0 else v
            oldp = pu0 if i == 0 else pv0
            newp = phase[w]
            if newp == oldp:
                continue
            before = started
            started = _phase_bookkeeping(P, w, oldp, newp, started)
            if before == 0 and started > 0:
                t_first_phase0 = t
                _scan_roles(P, n, roles_first)
            if started == n and t_phase0_all < 0:
                t_phase0_all = t
                _scan_roles(P, n, roles_all)
                _scan_tokens(P, n, T_hand)
                if improved:
                    T_ref = T_hand.copy()
            if newp >= 0:
                idx = np.int64(cycle[w]) * 10 + newp
                while lead_idx < idx:
                    lead_idx += 1
                    cyc = int(lead_idx // 10)
                    ph = int(lead_idx % 10)
                    if cyc >= max_cycles:
                        continue
                    if ph == 0:
                        t0_arr[cyc] = t
                        dop, multi, dcnt = _scan_flag_opinions(P, n, True)
                        if multi:
                            viol_n = _log_violation(viol_t, viol_code, viol_n,
                                                    t, V_DEF_NONUNIQUE_T0)
                        if expected_champ == 0 and not multi:
                            expected_champ = dop
                        prev = cyc - 1
                        if prev >= 1 and chal_op_arr[prev] != 0 \
                                and expected_champ > 0:
                            if T_ref[chal_op_arr[prev]] > T_ref[expected_champ]:
                                expected_champ = chal_op_arr[prev]
                        if (cyc >= 2 and expected_champ > 0 and dop != 0
                                and not multi and dop != expected_champ):
                            viol_n = _log_violation(viol_t, viol_code, viol_n,
                                                    t, V_CHAMPION)
                    elif ph == 2:
                        dop, multi, dcnt = _scan_flag_opinions(P, n, True)
                        if multi:
                            viol_n = _log_violation(viol_t, viol_code, viol_n,
                                                    t, V_DEF_NONUNIQUE_T2)
                        cop, cmulti, ccnt = _scan_flag_opinions(P, n, False)
                        if cmulti or (cop != 0 and chal_op_arr[cyc] != 0
                                      and cop != chal_op_arr[cyc]):
                            viol_n = _log_violation(viol_t, viol_code, viol_n,
                                                    t, V_CHAL_WRONG)
                    elif ph == 3:
                        dop, multi, dcnt = _scan_flag_opinions(P, n, True)
                        _scan_tokens(P, n, scratch_tokens)
                        t_def = scratch_tokens[dop] if dop != 0 else 0
                        cop = chal_op_arr[cyc]
                        t_chal = scratch_tokens[cop] if cop != 0 else 0
                        ell_sum, _ = _scan_ell_sum(P, n)
                        if not multi and ell_sum != t_def - t_chal:
                            viol_n = _log_violation(viol_t, viol_code, viol_n,
                                                    t, V_ELL_SUM)
                        gt_def_wins[cyc] = 1 if t_def >= t_chal else 0
                    elif ph == 6:
                        # lineup is over once the match opens anywhere
                        _, leftovers = _scan_ell_sum(P, n)
                        if leftovers > 0:
                            viol_n = _log_violation(viol_t, viol_code, viol_n,
                                                    t, V_LINEUP_LEFTOVER)
                    elif ph == 9:
                        # match reports are frozen once phase 9 opens
                        n_b, n_au = _scan_player_outputs(P, n)
                        if chal_op_arr[cyc] != 0:
                            if n_b > 0 and n_au > 0:
                                viol_n = _log_violation(viol_t, viol_code,
                                                        viol_n, t,
                                                        V_MATCH_SPLIT)
                            elif gt_def_wins[cyc] == 1 and n_b > 0:
                                viol_n = _log_violation(viol_t, viol_code,
                                                        viol_n, t,
                                                        V_MATCH_WRONG)
                            elif gt_def_wins[cyc] == 0 and n_au > 0:
                                viol_n = _log_violation(viol_t, viol_code,
                                                        viol_n, t,
                                                        V_MATCH_WRONG)

        if t >= next_audit:
            next_audit += audit_every
            snapshots += 1
            if started == 0:
                total = _scan_tokens(P, n, scratch_tokens)
                ok = total == n
                if ok:
                    for op in range(1, k + 1):
                        if scratch_tokens[op] != x0[op]:
                            ok = False
                            break
                if not ok:
                    viol_n = _log_violation(viol_t, viol_code, viol_n, t,
                                            V_INIT_TOKENS)
            else:
                if not _phase_gap_ok(P, n):
                    gap_bad += 1
                if not _dead_fields_ok(P, n):
                    viol_n = _log_violation(viol_t, viol_code, viol_n, t,
                                            V_DEAD_FIELD)

    # end-of-trial leader accounting (unordered machinery only)
    leaders = 0
    if variant != VARIANT_ORDERED:
        for i in range(n):
            if leader[i] != 0:
                leaders += 1
        if leaders > 1:
            viol_n = _log_violation(viol_t, viol_code, viol_n, t,
                                    V_MULTI_LEADER)
        if status == STATUS_TIMEOUT and leaders == 0:
            viol_n = _log_violation(viol_t, viol_code, viol_n, t, V_NO_LEADER)

    tournaments = 0
    for c in range(max_cycles):
        if chal_op_arr[c] != 0:
            tournaments += 1

    return (t, status, winner_op,
            t_first_phase0, t_phase0_all, t_winner_first, t_converged,
            t0_arr, chal_op_arr, tournaments,
            viol_t, viol_code, viol_n,
            gap_bad, snapshots,
            roles_first, roles_all,
            T_hand, junta_by_op, s0_op, s1_op,
            leaders)


@njit(cache=True)
def reference_kernel(P, variant, n, k, seed,
                     psi, init_target, subround_q, maj_rounds, maj_exp_cap,
                     maj_bcast_from, le_rounds, jm, jlmax, jp_cap,
                     phase_floor, steps):
    """State-identical slow path built from the modular transition functions.

    Runs exactly ``steps`` interactions (no convergence checks, milestones
    or audits, none of which touch agent state) and returns the final rng
    state.  The test suite uses it to pin ``trial_kernel`` to the modular
    rules in :mod:`pluralsim.simple` / :mod:`pluralsim.improved`.
    """
    state = np.uint64(seed)
    mask = sm64_mask(n)
    mask3 = np.uint64(3)
    hold_enabled = variant != VARIANT_ORDERED
    started = 0
    for _ in range(steps):
        state, u, v = sample_pair_kernel(state, n, mask)
        pu0 = P.phase[u]
        pv0 = P.phase[v]
        ru0 = P.role[u]

        if P.winner[u] != 0 or P.winner[v] != 0:
            winner_epidemic(P, u, v)
            continue
        fired = final_broadcast_trigger(P, u, v, k, variant)
        if not fired:
            if variant == VARIANT_IMPROVED:
                if pu0 < 0:
                    state = modified_init_transition(P, u, v, pu0, pv0, state,
                                                     mask3, jm, jlmax, jp_cap,
                                                     phase_floor)
            else:
                if pu0 == -1:
                    state = init_transition(P, u, v, pu0, pv0, variant, state,
                                            mask3)
            if ru0 == ROLE_CLOCK:
                clock_transition(P, u, v, pu0, pv0, psi, init_target,
                                 subround_q, maj_rounds, hold_enabled)
            if variant == VARIANT_ORDERED:
                if ru0 == ROLE_TRACKER and pu0 == 0:
                    tracker_tick(P, u, k)
                if P.role[v] == ROLE_TRACKER and pv0 == 0:
                    tracker_tick(P, v, k)
            else:
                if ru0 == ROLE_TRACKER:
                    state = unordered_selection(P, u, v, pu0, pv0, state,
                                                le_rounds, jm, jlmax, jp_cap)
                broadcast_relays(P, u, v, pu0, pv0)
            tournament_transition(P, u, v, pu0, pv0, maj_exp_cap,
                                  maj_bcast_from, variant == VARIANT_ORDERED)
            pu_now = P.phase[u]
            pv_now = P.phase[v]
            if pu_now >= 0 and pv_now >= 0 and phase_ahead(pu_now, pv_now):
                P.phase[u] = pv_now
                if P.role[u] == ROLE_CLOCK:
                    P.count[u] = 0

        for i in range(2):
            w = u if i == 0 else v
            oldp = pu0 if i == 0 else pv0
            newp = P.phase[w]
            if newp != oldp:
                started = _phase_bookkeeping(P, w, oldp, newp, started)
    return state
