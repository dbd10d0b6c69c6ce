"""Seedable random source shared by the simulator kernels.

The generator is SplitMix64 (Steele, Lea & Flood; the stream generator
behind Java's ``SplittableRandom``): a 64-bit counter advanced by the
golden-gamma constant and finalized with two xor-multiply rounds.  It is
implemented here directly, on ``uint64`` arithmetic, so that a trial's
interaction sequence is bit-identical across platforms and numpy/numba
versions.  Bounded draws use mask-and-reject, which is exactly uniform.
"""

from __future__ import annotations

import numpy as np
from numba import njit

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True, inline="always")
def sm64_next(state):
    """Advance a SplitMix64 state by one step; returns (new_state, output)."""
    state = state + GAMMA
    z = state
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    z = z ^ (z >> np.uint64(31))
    return state, z


@njit(cache=True, inline="always")
def sm64_mask(bound):
    """Smallest all-ones mask covering ``bound - 1``."""
    m = np.uint64(1)
    b = np.uint64(bound - 1)
    while m < b:
        m = (m << np.uint64(1)) | np.uint64(1)
    return m


@njit(cache=True, inline="always")
def sm64_below(state, bound, mask):
    """Uniform draw in [0, bound) via mask-and-reject; returns (state, value)."""
    while True:
        state, z = sm64_next(state)
        v = z & mask
        if v < np.uint64(bound):
            return state, int(v)


@njit(cache=True, inline="always")
def sm64_coin(state):
    """Fair coin; returns (state, 0 or 1)."""
    state, z = sm64_next(state)
    return state, int(z >> np.uint64(63))


@njit(cache=True)
def sample_pair_kernel(state, n, mask):
    """Ordered pair of distinct agent indices, uniform over n*(n-1) pairs."""
    state, u = sm64_below(state, n, mask)
    while True:
        state, v = sm64_below(state, n, mask)
        if v != u:
            return state, u, v


@njit(cache=True)
def sample_pairs_batch(seed, n, count):
    """Draw ``count`` ordered pairs from one stream (for distribution tests)."""
    state = np.uint64(seed)
    mask = sm64_mask(n)
    out = np.empty((count, 2), dtype=np.int64)
    for i in range(count):
        state, u, v = sample_pair_kernel(state, n, mask)
        out[i, 0] = u
        out[i, 1] = v
    return out


class SplitMix64:
    """Tiny object wrapper around the SplitMix64 stream for scheduler use."""

    def __init__(self, seed: int):
        self.state = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)

    def next_u64(self) -> int:
        self.state, z = sm64_next(self.state)
        return int(z)

    def below(self, bound: int) -> int:
        if bound <= 0:
            raise ValueError("bound must be positive")
        self.state, v = sm64_below(self.state, bound, sm64_mask(bound))
        return v


def sample_pair(rng: SplitMix64, n: int) -> tuple[int, int]:
    """One uniformly random ordered pair of distinct agents (initiator, responder).

    Raises ``ValueError`` for populations below two agents; every ordered
    pair has probability 1/(n*(n-1)).
    """
    if n < 2:
        raise ValueError(f"population size must be at least 2, got {n}")
    rng.state, u, v = sample_pair_kernel(rng.state, n, sm64_mask(n))
    return u, v
