"""Simulator and Monte-Carlo harness for exact plurality consensus protocols.

Agents interact in uniformly random ordered pairs and decide the initially
most frequent opinion through a sequence of pairwise tournaments, in three
variants: ordered opinions, unordered opinions (leader-driven challenger
selection), and a pruning variant that silences insignificant opinions
with per-opinion junta clocks before any tournament runs.
"""

from .config import (ProtocolConfig, DistributionSpec, ConfigError,
                     make_config, uniform_distribution, bias_one_distribution,
                     one_dominant_distribution)
from .engine import (run_trial, run_init_probe, TrialResult,
                     audit_state_budget, StateBudgetReport, sample_pair,
                     SplitMix64)
from .improved import classify_opinions, handoff_check

__version__ = "0.1.0"

__all__ = [
    "ProtocolConfig", "DistributionSpec", "ConfigError", "make_config",
    "uniform_distribution", "bias_one_distribution",
    "one_dominant_distribution",
    "run_trial", "run_init_probe", "TrialResult", "audit_state_budget",
    "StateBudgetReport", "sample_pair", "SplitMix64",
    "classify_opinions", "handoff_check",
    "__version__",
]
