"""Trial execution: scheduler, state machine dispatch, metrics, audits.

``run_trial`` is the single entry point: one (configuration, seed) pair in,
one fully reproducible ``TrialResult`` out.  The interaction loop itself
lives in :mod:`pluralsim.kernel`; this module prepares the population,
unpacks the kernel's raw outputs into the result record, and houses the
state-budget audit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from . import kernel
from .config import ProtocolConfig
from .kernel import trial_kernel, STATUS_CONVERGED, STATUS_TIMEOUT, STATUS_HORIZON
from .population import (AgentArrays, allocate, seed_population,
                         ROLE_COLLECTOR, ROLE_CLOCK, ROLE_TRACKER, ROLE_PLAYER,
                         VARIANT_IMPROVED)
from .rng import SplitMix64, sample_pair  # re-exported scheduler primitives

__all__ = ["run_trial", "run_init_probe", "TrialResult", "StateBudgetReport",
           "audit_state_budget", "sample_pair", "SplitMix64"]

VIOLATION_NAMES = {
    kernel.V_INIT_TOKENS: "init-token-conservation",
    kernel.V_DEF_NONUNIQUE_T0: "defender-not-unique-at-t0",
    kernel.V_CHAL_WRONG: "challenger-bit-wrong-opinion",
    kernel.V_DEF_NONUNIQUE_T2: "defender-not-unique-at-t2",
    kernel.V_ELL_SUM: "load-sum-mismatch-after-cancellation",
    kernel.V_MATCH_SPLIT: "match-outputs-disagree",
    kernel.V_MATCH_WRONG: "match-output-wrong-side",
    kernel.V_LINEUP_LEFTOVER: "lineup-left-unplaced-load",
    kernel.V_DEAD_FIELD: "dead-field-not-reset",
    kernel.V_MULTI_LEADER: "multiple-leaders",
    kernel.V_NO_LEADER: "no-leader-at-timeout",
    kernel.V_WINNER_SPLIT: "winner-opinions-disagree",
    kernel.V_CHAMPION: "defender-is-not-running-plurality",
}

STATUS_NAMES = {STATUS_CONVERGED: "converged", STATUS_TIMEOUT: "timeout",
                STATUS_HORIZON: "horizon"}

ROLE_NAMES = {ROLE_COLLECTOR: "collector", ROLE_CLOCK: "clock",
              ROLE_TRACKER: "tracker", ROLE_PLAYER: "player"}


@dataclass
class TrialResult:
    """Everything one trial reports; a pure function of (config, seed)."""

    rng_seed: int
    winner: int | None
    correct: bool
    status: str
    timed_out: bool
    interactions_total: int
    parallel_time: float
    milestones: dict[str, int]
    invariant_violations: list[tuple[int, str]]
    tournaments_executed: int
    challengers: tuple[int, ...]
    roles_at_first_phase0: dict[str, int]
    roles_at_phase0_all: dict[str, int]
    tokens_at_handoff: tuple[int, ...]
    surviving_opinions: tuple[int, ...]
    junta_by_opinion: tuple[int, ...]
    first_junta_by_opinion: tuple[int, ...]
    first_hour_by_opinion: tuple[int, ...]
    leaders: int
    phase_gap_bad_snapshots: int
    snapshots: int
    config_fingerprint: str

    def milestone_parallel_times(self, n: int) -> dict[str, float]:
        return {name: t / n for name, t in self.milestones.items()}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["winner"] = self.winner if self.winner is not None else None
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def _build_population(config: ProtocolConfig) -> AgentArrays:
    pop = allocate(config.n)
    seed_population(pop, config.distribution, config.variant_code,
                    config.phase_floor)
    return pop


def run_trial(config: ProtocolConfig, seed: int, horizon: int = 0,
              keep_population: bool = False):
    """Simulate one trial; identical (config, seed) gives identical results.

    ``horizon`` > 0 stops the trial after exactly that many interactions
    (used by the preprocessing probes).  With ``keep_population`` the final
    agent arrays are returned alongside the result for post-hoc audits.
    """
    pop = _build_population(config)
    x0 = np.zeros(config.k + 1, dtype=np.int64)
    for i, x in enumerate(config.distribution, start=1):
        x0[i] = x
    out = trial_kernel(
        pop, config.variant_code, config.n, config.k, x0,
        np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
        config.psi, config.init_count_target, config.subround_q,
        config.majority_rounds, config.majority_exp_cap,
        config.majority_broadcast_from, config.le_rounds, config.junta_m,
        config.junta_lmax, config.junta_p_cap, config.phase_floor,
        config.interaction_cap, config.audit_cadence, horizon,
        config.max_cycles)
    (t, status, winner_op,
     t_first_phase0, t_phase0_all, t_winner_first, t_converged,
     t0_arr, chal_op_arr, tournaments,
     viol_t, viol_code, viol_n,
     gap_bad, snapshots,
     roles_first, roles_all,
     T_hand, junta_by_op, s0_op, s1_op,
     leaders) = out

    milestones: dict[str, int] = {}
    if t_first_phase0 >= 0:
        milestones["first_phase0"] = int(t_first_phase0)
    if t_phase0_all >= 0:
        milestones["phase0_all"] = int(t_phase0_all)
    tj = 0
    for c in range(len(t0_arr)):
        if t0_arr[c] >= 0:
            milestones[f"cycle_{c}_start"] = int(t0_arr[c])
            if chal_op_arr[c] != 0:
                tj += 1
                milestones[f"tournament_{tj}_start"] = int(t0_arr[c])
    if t_winner_first >= 0:
        milestones["winner_first_set"] = int(t_winner_first)
    if t_converged >= 0:
        milestones["all_converged"] = int(t_converged)

    violations = [(int(viol_t[i]), VIOLATION_NAMES.get(int(viol_code[i]), "unknown"))
                  for i in range(min(viol_n, len(viol_code)))]
    challengers = tuple(int(chal_op_arr[c]) for c in range(len(chal_op_arr))
                        if chal_op_arr[c] != 0)
    winner = int(winner_op) if status == STATUS_CONVERGED and winner_op > 0 else None
    surviving = tuple(op for op in range(1, config.k + 1) if T_hand[op] > 0)

    result = TrialResult(
        rng_seed=int(seed),
        winner=winner,
        correct=winner == config.plurality_opinion,
        status=STATUS_NAMES[int(status)],
        timed_out=status == STATUS_TIMEOUT,
        interactions_total=int(t),
        parallel_time=float(t) / config.n,
        milestones=milestones,
        invariant_violations=violations,
        tournaments_executed=int(tournaments),
        challengers=challengers,
        roles_at_first_phase0={ROLE_NAMES[r]: int(roles_first[r]) for r in range(4)},
        roles_at_phase0_all={ROLE_NAMES[r]: int(roles_all[r]) for r in range(4)},
        tokens_at_handoff=tuple(int(T_hand[i]) for i in range(1, config.k + 1)),
        surviving_opinions=surviving,
        junta_by_opinion=tuple(int(junta_by_op[i]) for i in range(1, config.k + 1)),
        first_junta_by_opinion=tuple(int(s0_op[i]) for i in range(1, config.k + 1)),
        first_hour_by_opinion=tuple(int(s1_op[i]) for i in range(1, config.k + 1)),
        leaders=int(leaders),
        phase_gap_bad_snapshots=int(gap_bad),
        snapshots=int(snapshots),
        config_fingerprint=config.fingerprint(),
    )
    if keep_population:
        return result, pop
    return result


def run_init_probe(config: ProtocolConfig, seed: int, horizon: int):
    """Run only the first ``horizon`` interactions and report the trial state.

    Used for preprocessing-phase statistics (junta formation, per-opinion
    clock speeds) without paying for full convergence.
    """
    return run_trial(config, seed, horizon=horizon)


# ---------------------------------------------------------------------------
# State-budget audit
# ---------------------------------------------------------------------------

# Documented budget constants.  They absorb the constant-size factors the
# asymptotic statements hide: the shared role/phase/flag product, the 10*21
# collector token/load block, and the default majority's exponent-times-round
# bookkeeping (the known extra log factor of the cancel/double match, mirrored
# in its runtime).  Sized once against the n in {2^10, 2^14}, k in {4, 16}
# grid with ~2x headroom and then fixed.
BUDGET_CONSTANT_SIMPLE = 600_000
BUDGET_CONSTANT_IMPROVED = 2_000_000


@dataclass
class StateBudgetReport:
    """Reachable-state counts per role against the variant's budget."""

    per_role: dict[str, int]
    shared: int
    max_states_used: int
    bound: int
    constant: int
    ok: bool
    discipline_ok: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _junta_clock_states(config: ProtocolConfig) -> int:
    return ((config.junta_lmax + 1) * 2 * 2 * (config.junta_p_cap + 1))


def audit_state_budget(pop: AgentArrays, config: ProtocolConfig) -> StateBudgetReport:
    """Count reachable per-role state combinations and compare to the budget.

    Counters that the transition rules only ever consult through a bounded
    window are audited at the window's cardinality even where the arrays
    store them denormalized (the leader-election round is floor(p/m) of the
    clock counter; the heads marker is only compared within one round of
    the owner's round; a winner agent's carried opinion always mirrors its
    opinion field -- the snapshot discipline check below enforces these).
    The ``ok`` verdict compares the worst role against
    C * (k + log2 n) for the tournament variants and
    C * (k * log2 log2 n + log2 n) for the pruning variant.
    """
    k = config.k
    L = config.log2n
    phase_values = (config.phase_floor + 10 if config.variant == "improved"
                    else 11)
    shared = 4 * phase_values * 8 * 2 * 2  # role, phase, flags, winner, go
    count_range = max(config.psi, config.init_count_target) + 1
    clock = count_range * (config.majority_rounds + 1)
    if config.variant == "ordered":
        tracker = k + 2
    else:
        tracker = ((k + 1) * 4            # selection slot and tag
                   * 2 * 2 * 3 * 2 * 2 * 2 * 2   # cont, coin, heads window,
                                                 # done, leader, defsel, exhausted
                   * _junta_clock_states(config))
    collector = (k + 1) * 11 * 21 * 2 * 2 * 2
    if config.variant == "improved":
        pre_collector = (k + 1) * 11 * 2 * _junta_clock_states(config)
        collector = max(collector, pre_collector)
    player = 3 * 3 * (config.majority_exp_cap + 2) * 2 * (config.majority_rounds + 1)

    per_role = {"collector": shared * collector, "clock": shared * clock,
                "tracker": shared * tracker, "player": shared * player}
    max_states = max(per_role.values())
    if config.variant == "improved":
        constant = BUDGET_CONSTANT_IMPROVED
        bound = int(constant * (k * math.log2(max(2.0, math.log2(config.n))) + L))
    else:
        constant = BUDGET_CONSTANT_SIMPLE
        bound = constant * (k + L)

    discipline_ok = _snapshot_discipline_ok(pop, config)
    return StateBudgetReport(per_role=per_role, shared=shared,
                             max_states_used=max_states, bound=bound,
                             constant=constant,
                             ok=max_states <= bound and discipline_ok,
                             discipline_ok=discipline_ok)


def _snapshot_discipline_ok(pop: AgentArrays, config: ProtocolConfig) -> bool:
    """Dead fields hold reset values; winner agents mirror their opinion."""
    role = pop.role
    non_collector = role != ROLE_COLLECTOR
    if (np.any(pop.opinion[non_collector] != 0)
            or np.any(pop.tokens[non_collector] != 0)
            or np.any(pop.ell[non_collector] != 0)
            or np.any(pop.defender[non_collector] != 0)
            or np.any(pop.challenger[non_collector] != 0)):
        return False
    non_tracker = role != ROLE_TRACKER
    if np.any(pop.tc[non_tracker] != 0) or np.any(pop.ttag[non_tracker] != 0):
        return False
    non_player = role != ROLE_PLAYER
    if np.any(pop.pop[non_player] != 0) or np.any(pop.msign[non_player] != 0):
        return False
    non_clock = role != ROLE_CLOCK
    if np.any(pop.match_sub[non_clock] != 0):
        return False
    winners = pop.winner != 0
    if np.any(pop.win_op[winners] != pop.opinion[winners]):
        return False
    if np.any(pop.win_op[~winners] != 0):
        return False
    return True
