"""Pruning-based variant: junta-driven per-opinion clocks before the tournaments.

During the extended initialization every agent keeps its opinion's phase
clock running on meaningful interactions (same opinion, both still in a
negative phase).  Opinions whose clocks never pass through zero are pruned
at the handoff: their agents convert to Clock/Tracker/Player without
carrying tokens forward.  The surviving population then runs the
tournament machinery for unordered opinions.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .population import ROLE_COLLECTOR, switch_role, clear_junta_fields
from .rng import sm64_below
from .subprotocols import junta_step, junta_clock_step


@njit(cache=True, inline="always")
def meaningful_interaction_gate(role_u, opinion_u, phase_u, role_v, opinion_v,
                                phase_v):
    """True iff both agents are pre-phase Collectors of the same opinion."""
    return (role_u == ROLE_COLLECTOR and role_v == ROLE_COLLECTOR
            and opinion_u == opinion_v and opinion_u != 0
            and phase_u < 0 and phase_v < 0)


@njit(cache=True)
def modified_init_transition(P, u, v, pu0, pv0, state, mask3, jm, jlmax,
                             jp_cap, phase_floor):
    """Extended initialization step for an initiator still in a negative phase.

    Meaningful interactions drive the junta election and the opinion's
    phase clock (each hour crossing lifts the phase by one, saturating at
    zero) and transfer tokens as in the plain initialization.  Contact with
    a phase-0 agent ends the initiator's preprocessing: it converts to a
    random non-Collector role if it is out of tokens or its clock never
    ticked, and enters phase 0 either way.
    """
    crossed_to_zero = False
    if meaningful_interaction_gate(P.role[u], P.opinion[u], pu0,
                                   P.role[v], P.opinion[v], pv0):
        lu, au, ju = junta_step(P.jlevel[u], P.jactive[u], P.jisj[u],
                                P.jlevel[v], jlmax)
        P.jlevel[u], P.jactive[u], P.jisj[u] = lu, au, ju
        p_new, crossed = junta_clock_step(P.jp[u], P.jisj[u], P.jp[v], jm,
                                          jp_cap)
        P.jp[u] = p_new
        if crossed > 0:
            ph = P.phase[u] + crossed
            if ph >= 0:
                ph = 0
                crossed_to_zero = True
            P.phase[u] = ph
        if P.tokens[u] + P.tokens[v] <= 10:
            P.tokens[v] = P.tokens[v] + P.tokens[u]
            P.tokens[u] = 0
    if crossed_to_zero or pv0 == 0:
        # phase still reads its pre-handoff value when triggered by the
        # partner; an agent whose own clock just reached zero cannot be at
        # the phase floor, so only the token test applies to it
        if P.phase[u] == -phase_floor or P.tokens[u] == 0:
            state, r = sm64_below(state, 3, mask3)
            switch_role(P, u, r)
        elif P.role[u] == ROLE_COLLECTOR:
            clear_junta_fields(P, u, 0)
        P.phase[u] = 0
    return state


def classify_opinions(x, significance_ratio: float):
    """Partition opinion indices (1-based) into significant and insignificant.

    An opinion is insignificant when its initial support is at most
    x_max / ratio.  Harness-side ground truth only; agents never see it.
    """
    x = np.asarray(x, dtype=np.int64)
    x_max = int(x.max())
    threshold = x_max / significance_ratio
    insignificant = {i + 1 for i, xi in enumerate(x) if xi <= threshold}
    significant = {i + 1 for i in range(len(x))} - insignificant
    return significant, insignificant


def handoff_check(pop, k: int):
    """Population report at the handoff milestone.

    Returns (token totals per opinion indexed 1..k, role counts indexed by
    role code, surviving opinion set).  Surviving means at least one
    token-holding Collector remains.
    """
    tokens_by_op = np.zeros(k + 1, dtype=np.int64)
    role_counts = np.zeros(4, dtype=np.int64)
    for i in range(pop.role.shape[0]):
        role_counts[pop.role[i]] += 1
        if pop.role[i] == ROLE_COLLECTOR and pop.tokens[i] > 0:
            tokens_by_op[pop.opinion[i]] += pop.tokens[i]
    surviving = {op for op in range(1, k + 1) if tokens_by_op[op] > 0}
    return tokens_by_op, role_counts, surviving
