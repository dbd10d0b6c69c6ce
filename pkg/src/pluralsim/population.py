"""Per-agent state arrays and role bookkeeping.

Agent state is kept as a structure of numpy arrays so the interaction
kernels stay allocation-free.  Fields outside an agent's current role are
held at their reset values; the role-switch helpers below enforce that,
and the engine's state-budget audit checks it on snapshots.
"""

from __future__ import annotations

from collections import namedtuple

import numpy as np
from numba import njit

ROLE_COLLECTOR = 0
ROLE_CLOCK = 1
ROLE_TRACKER = 2
ROLE_PLAYER = 3

VARIANT_ORDERED = 0
VARIANT_UNORDERED = 1
VARIANT_IMPROVED = 2

VARIANT_CODES = {"ordered": VARIANT_ORDERED,
                 "unordered": VARIANT_UNORDERED,
                 "improved": VARIANT_IMPROVED}

# flag bits, per agent; PHASE_ACTED and CONCL_DONE reset on phase change
FLAG_INITIATED = 1
FLAG_PHASE_ACTED = 2
FLAG_CONCL_DONE = 4

AgentArrays = namedtuple("AgentArrays", [
    "role",        # i8: Collector/Clock/Tracker/Player
    "phase",       # i8: -phase_floor..9 (-1 family for the simple variants)
    "count",       # i32: Clock counter (init countdown, then mod psi)
    "match_sub",   # i16: Clock sub-round counter inside the match phase
    "tc",          # i16: Tracker tournament counter (ordered variant)
    "opinion",     # i16: Collector opinion, 1..k (0 = none)
    "tokens",      # i8: Collector token load, 0..10
    "ell",         # i8: Collector cancellation load, -10..10
    "defender",    # u8
    "challenger",  # u8
    "eliminated",  # u8: opinion already lost a tournament (unordered)
    "winner",      # u8
    "win_op",      # i16: opinion carried by the winner bit
    "pop",         # i8: player opinion U/A/B
    "msign",       # i8: majority value sign
    "mexp",        # i8: majority value exponent
    "macted",      # i8: split already performed in the current sub-round
    "mround",      # i16: player's view of the current majority sub-round
    "flags",       # u8
    "tslot",       # i16: Tracker opinion slot for selection gossip (unordered)
    "ttag",        # i8: slot tag: 0 empty, 1 candidate, 2 challenger, 3 defender
    "ldefsel",     # u8: leader has already selected the initial defender
    "go",          # u8: clocks may advance past the held phase 0
    "lcont",       # u8: leader-election contender bit
    "lrnd",        # i32: leader-election round
    "lcoin",       # i8: 1 = tails pending for the current round
    "lheads",      # i32: highest round with a gossiped heads flip
    "ldone",       # u8: leader election finished locally
    "leader",      # u8: the unique leader (w.h.p.)
    "exhausted",   # u8: leader found no remaining challenger
    "jlevel",      # i8: junta level
    "jactive",     # u8
    "jisj",        # u8: junta member
    "jp",          # i32: junta phase counter
    "cycle",       # i16: simulator bookkeeping: completed phase-0 entries
])


def allocate(n: int) -> AgentArrays:
    return AgentArrays(
        role=np.zeros(n, dtype=np.int8),
        phase=np.full(n, -1, dtype=np.int8),
        count=np.zeros(n, dtype=np.int32),
        match_sub=np.zeros(n, dtype=np.int16),
        tc=np.zeros(n, dtype=np.int16),
        opinion=np.zeros(n, dtype=np.int16),
        tokens=np.zeros(n, dtype=np.int8),
        ell=np.zeros(n, dtype=np.int8),
        defender=np.zeros(n, dtype=np.uint8),
        challenger=np.zeros(n, dtype=np.uint8),
        eliminated=np.zeros(n, dtype=np.uint8),
        winner=np.zeros(n, dtype=np.uint8),
        win_op=np.zeros(n, dtype=np.int16),
        pop=np.zeros(n, dtype=np.int8),
        msign=np.zeros(n, dtype=np.int8),
        mexp=np.zeros(n, dtype=np.int8),
        macted=np.zeros(n, dtype=np.int8),
        mround=np.zeros(n, dtype=np.int16),
        flags=np.zeros(n, dtype=np.uint8),
        tslot=np.zeros(n, dtype=np.int16),
        ttag=np.zeros(n, dtype=np.int8),
        ldefsel=np.zeros(n, dtype=np.uint8),
        go=np.zeros(n, dtype=np.uint8),
        lcont=np.zeros(n, dtype=np.uint8),
        lrnd=np.zeros(n, dtype=np.int32),
        lcoin=np.zeros(n, dtype=np.int8),
        lheads=np.full(n, -1, dtype=np.int32),
        ldone=np.zeros(n, dtype=np.uint8),
        leader=np.zeros(n, dtype=np.uint8),
        exhausted=np.zeros(n, dtype=np.uint8),
        jlevel=np.zeros(n, dtype=np.int8),
        jactive=np.zeros(n, dtype=np.uint8),
        jisj=np.zeros(n, dtype=np.uint8),
        jp=np.zeros(n, dtype=np.int32),
        cycle=np.zeros(n, dtype=np.int16),
    )


def seed_population(pop: AgentArrays, distribution, variant: int, phase_floor: int) -> None:
    """Set every agent to a token-holding Collector of its initial opinion."""
    n = pop.role.shape[0]
    start_phase = -phase_floor if variant == VARIANT_IMPROVED else -1
    pop.phase[:] = start_phase
    i = 0
    for op, x in enumerate(distribution, start=1):
        pop.opinion[i:i + x] = op
        i += x
    assert i == n, "distribution must sum to the population size"
    pop.tokens[:] = 1
    if variant == VARIANT_IMPROVED:
        pop.jactive[:] = 1


@njit(cache=True, inline="always")
def clear_collector_fields(P, u):
    P.opinion[u] = 0
    P.tokens[u] = 0
    P.ell[u] = 0
    P.defender[u] = 0
    P.challenger[u] = 0
    P.eliminated[u] = 0


@njit(cache=True, inline="always")
def clear_junta_fields(P, u, active):
    P.jlevel[u] = 0
    P.jactive[u] = active
    P.jisj[u] = 0
    P.jp[u] = 0


@njit(cache=True, inline="always")
def switch_role(P, u, choice):
    """Convert Collector ``u`` to Clock/Tracker/Player (choice 0/1/2)."""
    clear_collector_fields(P, u)
    if choice == 0:
        P.role[u] = ROLE_CLOCK
        P.count[u] = 0
        P.match_sub[u] = 0
        clear_junta_fields(P, u, 0)
    elif choice == 1:
        P.role[u] = ROLE_TRACKER
        P.tc[u] = 1
        P.tslot[u] = 0
        P.ttag[u] = 0
        P.lcont[u] = 1
        P.lrnd[u] = 0
        P.lcoin[u] = 0
        P.lheads[u] = -1
        P.ldone[u] = 0
        # trackers run a fresh junta clock for leader election
        clear_junta_fields(P, u, 1)
    else:
        P.role[u] = ROLE_PLAYER
        P.pop[u] = 0
        P.msign[u] = 0
        P.mexp[u] = 0
        P.macted[u] = 0
        P.mround[u] = 0
        clear_junta_fields(P, u, 0)


@njit(cache=True, inline="always")
def adopt_winner(P, u, op):
    """Convert ``u`` into a winner-carrying Collector with no token mass.

    Only used for agents learning the result; the original winner keeps its
    Collector state and just raises its own bit in place.
    """
    clear_collector_fields(P, u)
    P.count[u] = 0
    P.match_sub[u] = 0
    P.tc[u] = 0
    P.tslot[u] = 0
    P.ttag[u] = 0
    P.pop[u] = 0
    P.msign[u] = 0
    P.mexp[u] = 0
    P.macted[u] = 0
    P.mround[u] = 0
    clear_junta_fields(P, u, 0)
    P.lcont[u] = 0
    P.ldone[u] = 0
    P.leader[u] = 0
    P.role[u] = ROLE_COLLECTOR
    P.opinion[u] = op
    P.winner[u] = 1
    P.win_op[u] = op
