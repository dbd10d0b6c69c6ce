"""Trial configuration: population, opinion distribution, tunable constants.

All protocol constants that the analysis leaves as "sufficiently large"
are exposed here with calibrated defaults; the derived accessors turn them
into the integer quantities the kernel consumes.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .population import VARIANT_CODES

VARIANTS = ("ordered", "unordered", "improved")


class ConfigError(ValueError):
    """A configuration that violates a protocol precondition."""


def log2_ceil(n: int) -> int:
    return max(1, int(math.ceil(math.log2(max(n, 2)))))


def uniform_distribution(n: int, k: int) -> tuple[int, ...]:
    """Largest-remainder uniform split of n over k opinions."""
    base = n // k
    rem = n % k
    return tuple(base + 1 if i < rem else base for i in range(k))


def bias_one_distribution(n: int, k: int) -> tuple[int, ...]:
    """Distribution with bias exactly one: x1 = M + 1 and max of the rest = M."""
    if k < 2:
        raise ConfigError("bias-one requires at least two opinions")
    m = math.ceil((n - 1) / k)
    rest = n - m - 1
    if rest < m or rest > (k - 1) * m or rest < k - 1:
        raise ConfigError(
            f"bias-one is infeasible for n={n}, k={k}: cannot place a "
            f"second-largest opinion of size {m}; adjust n's parity or k")
    base = rest // (k - 1)
    r = rest % (k - 1)
    tail = [base + 1 if i < r else base for i in range(k - 1)]
    tail.sort(reverse=True)
    if tail[0] != m:
        raise ConfigError(
            f"bias-one is infeasible for n={n}, k={k}: remainder shape "
            f"{tail[0]} != {m}; adjust n's parity or k")
    return (m + 1, *tail)


def one_dominant_distribution(n: int, k: int, alpha: float) -> tuple[int, ...]:
    """One opinion at round(alpha * n), the rest split uniformly."""
    if k < 2:
        raise ConfigError("one-dominant requires at least two opinions")
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"one-dominant share must be in (0, 1), got {alpha}")
    x1 = round(alpha * n)
    rest = n - x1
    base = rest // (k - 1)
    r = rest % (k - 1)
    tail = tuple(base + 1 if i < r else base for i in range(k - 1))
    if x1 <= max(tail):
        raise ConfigError(
            f"one-dominant share {alpha} does not dominate: {x1} vs {max(tail)}")
    return (x1, *tail)


@dataclass(frozen=True)
class DistributionSpec:
    """Named opinion-distribution family with its parameters."""

    family: str                         # explicit | uniform | bias-one | one-dominant
    vector: tuple[int, ...] = ()        # explicit only
    alpha: float = 0.0                  # one-dominant only

    def build(self, n: int, k: int) -> tuple[int, ...]:
        if self.family == "explicit":
            if len(self.vector) != k:
                raise ConfigError(
                    f"explicit vector has {len(self.vector)} entries, expected k={k}")
            return tuple(int(x) for x in self.vector)
        if self.family == "uniform":
            return uniform_distribution(n, k)
        if self.family == "bias-one":
            return bias_one_distribution(n, k)
        if self.family == "one-dominant":
            return one_dominant_distribution(n, k, self.alpha)
        raise ConfigError(f"unknown distribution family {self.family!r}")

    @staticmethod
    def parse(text: str) -> "DistributionSpec":
        """Parse CLI syntax: ``uniform``, ``bias-one``, ``one-dominant:0.25``,
        or ``explicit:5000,3000,50x40`` (NxM repeats N a total of M times)."""
        text = text.strip()
        if text == "uniform":
            return DistributionSpec("uniform")
        if text == "bias-one":
            return DistributionSpec("bias-one")
        if text.startswith("one-dominant:"):
            return DistributionSpec("one-dominant",
                                    alpha=float(text.split(":", 1)[1]))
        if text.startswith("explicit:"):
            parts = text.split(":", 1)[1].split(",")
            vec: list[int] = []
            for p in parts:
                p = p.strip()
                if "x" in p:
                    val, times = p.split("x")
                    vec.extend([int(val)] * int(times))
                else:
                    vec.append(int(p))
            return DistributionSpec("explicit", vector=tuple(vec))
        raise ConfigError(f"cannot parse distribution {text!r}")

    def label(self) -> str:
        if self.family == "one-dominant":
            return f"one-dominant:{self.alpha:g}"
        if self.family == "explicit":
            return "explicit:" + ",".join(str(v) for v in self.vector)
        return self.family


@dataclass(frozen=True)
class ProtocolConfig:
    """Everything that determines a trial besides the seed."""

    n: int
    k: int
    distribution: tuple[int, ...]
    variant: str = "ordered"

    # leaderless clock: counter modulus psi = psi_factor * ceil(log2 n),
    # rounded up to a multiple of subrounds_per_wrap
    psi_factor: int = 6
    # initialization ends when a clock counts to init_count_factor * ceil(log2 n)
    init_count_factor: int = 5
    # majority sub-rounds per match; 0 derives 2 * (ceil(log2 n) + 1) + 6
    maj_rounds: int = 0
    subrounds_per_wrap: int = 4
    # leader election rounds = le_round_factor * ceil(log2 n)
    le_round_factor: int = 2
    # junta clock hour length m = junta_m_factor * ceil(log2 n / log2 log2 n)
    junta_m_factor: int = 8
    # junta maximum level = floor(log2 log2 n) - 2 + junta_level_boost
    junta_level_boost: int = 2
    # magnitude of the negative starting phase for the pruning variant
    phase_floor: int = 8
    # harness-side significance labeling: insignificant iff x_j <= x_max/ratio
    significance_ratio: float = 8.0
    epsilon: float = 0.25
    max_interactions: int = 0           # 0 = 200 * n * (k + ceil(log2 n)^2)
    audit_every: int = 0                # 0 = every n interactions
    allow_ties: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.n < 2:
            raise ConfigError(f"population size must be at least 2, got {self.n}")
        if self.k < 1:
            raise ConfigError(f"opinion count must be at least 1, got {self.k}")
        if len(self.distribution) != self.k:
            raise ConfigError(
                f"distribution has {len(self.distribution)} entries, expected k={self.k}")
        if any(x < 1 for x in self.distribution):
            raise ConfigError("every opinion needs at least one supporter")
        if sum(self.distribution) != self.n:
            raise ConfigError(
                f"distribution sums to {sum(self.distribution)}, expected n={self.n}")
        if self.variant in ("ordered", "unordered") and self.k > self.n // 40:
            raise ConfigError(
                f"k exceeds n/40 ({self.k} > {self.n // 40}); the tournament "
                f"variants require k <= n/40")
        x = sorted(self.distribution, reverse=True)
        if not self.allow_ties and self.k >= 2 and x[0] == x[1]:
            raise ConfigError(
                "plurality is not unique; set allow_ties for tie experiments")
        if not 0.0 < self.epsilon < 0.5:
            raise ConfigError(f"epsilon must be in (0, 1/2), got {self.epsilon}")

    # -- derived protocol constants ------------------------------------

    @property
    def log2n(self) -> int:
        return log2_ceil(self.n)

    @property
    def psi(self) -> int:
        raw = self.psi_factor * self.log2n
        q = self.subrounds_per_wrap
        return ((raw + q - 1) // q) * q

    @property
    def subround_q(self) -> int:
        return self.psi // self.subrounds_per_wrap

    @property
    def init_count_target(self) -> int:
        return self.init_count_factor * self.log2n

    @property
    def majority_rounds(self) -> int:
        if self.maj_rounds > 0:
            return self.maj_rounds
        return 2 * (self.log2n + 1) + 6

    @property
    def majority_exp_cap(self) -> int:
        return self.log2n + 1

    @property
    def majority_broadcast_from(self) -> int:
        return self.majority_rounds - 4

    @property
    def le_rounds(self) -> int:
        return self.le_round_factor * self.log2n

    @property
    def junta_m(self) -> int:
        loglog = max(1.0, math.log2(max(2.0, math.log2(self.n))))
        return self.junta_m_factor * math.ceil(self.log2n / loglog)

    @property
    def junta_lmax(self) -> int:
        return max(1, int(math.floor(math.log2(max(2.0, math.log2(self.n)))))
                   - 2 + self.junta_level_boost)

    @property
    def junta_p_cap(self) -> int:
        return self.junta_m * (max(self.phase_floor, self.le_rounds) + 2)

    @property
    def interaction_cap(self) -> int:
        if self.max_interactions > 0:
            return self.max_interactions
        return 200 * self.n * (self.k + self.log2n ** 2)

    @property
    def audit_cadence(self) -> int:
        return self.audit_every if self.audit_every > 0 else self.n

    @property
    def variant_code(self) -> int:
        return VARIANT_CODES[self.variant]

    @property
    def plurality_opinion(self) -> int:
        return 1 + int(np.argmax(self.distribution))

    @property
    def x_max(self) -> int:
        return max(self.distribution)

    @property
    def within_guarantee(self) -> bool:
        """Whether the variant's correctness theorem covers this configuration."""
        if self.variant == "improved":
            return self.x_max > self.n ** (0.5 + self.epsilon)
        return self.k <= self.n // 40

    @property
    def max_cycles(self) -> int:
        return self.k + 10

    # -- identity -------------------------------------------------------

    def canonical(self) -> dict:
        d = asdict(self)
        d["distribution"] = list(self.distribution)
        return d

    def fingerprint(self) -> str:
        payload = json.dumps(self.canonical(), sort_keys=True,
                             separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


def make_config(n: int, k: int, dist: DistributionSpec | str,
                variant: str = "ordered", **overrides) -> ProtocolConfig:
    """Build a validated configuration from a distribution spec or its syntax."""
    if isinstance(dist, str):
        dist = DistributionSpec.parse(dist)
    vector = dist.build(n, k)
    return ProtocolConfig(n=n, k=k, distribution=vector, variant=variant,
                          **overrides)
