"""Counter-based random number generation shared by both backends.

Every random value is a pure function of a 64-bit stream key and a counter:
``value = mix64(key + (counter + 1) * GAMMA)`` where ``mix64`` is the
SplitMix64 finalizer.  This makes streams trivially splittable (one key per
worker, per epoch) and lets the pure-Python backend vectorize whole epochs of
draws with numpy while producing the exact same values as the compiled
kernel's sequential loop.

The training kernel consumes ``3 * (nu + 1)`` counters per sample:

    offset 0, 1        data edge draw (alias slot, accept uniform)
    offset 2           reserved (unused)
    offset 3j+3 .. +5  noise edge j: alias slot, accept uniform, target index

Derived quantities:

    bounded(n)  = ((u64 >> 32) * n) >> 32          uniform on [0, n)
    unit()      = ((u64 >> 11) + 1) * 2**-53       uniform on (0, 1]
    alias pick  = slot if unit <= prob[slot] else alias[slot]
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB

# stream tags, one per independent consumer of randomness
TAG_HNSW_LEVELS = 1
TAG_TRAIN = 2
TAG_SAMPLER = 3

CALLS_PER_EVENT = 3


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a 64-bit integer."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX_A) & _MASK
    z = ((z ^ (z >> 27)) * _MIX_B) & _MASK
    return z ^ (z >> 31)


def stream_key(seed: int, *subs: int) -> int:
    """Derive an independent stream key from a seed and sub-stream indices."""
    key = mix64((seed & _MASK) ^ 0x243F6A8885A308D3)
    for s in subs:
        key = mix64((key + ((s + 1) * GAMMA)) & _MASK)
    return key


def rand_u64(key: int, counter: int) -> int:
    return mix64((key + (((counter + 1) * GAMMA) & _MASK)) & _MASK)


def rand_unit(key: int, counter: int) -> float:
    """Uniform double on (0, 1]."""
    return ((rand_u64(key, counter) >> 11) + 1) * 2.0**-53


def rand_bounded(key: int, counter: int, n: int) -> int:
    """Uniform integer on [0, n) via the multiply-shift trick."""
    return ((rand_u64(key, counter) >> 32) * n) >> 32


class CounterRng:
    """Stateful view over a counter stream, for sequential consumers."""

    __slots__ = ("key", "counter")

    def __init__(self, seed: int, *subs: int):
        self.key = stream_key(seed, *subs)
        self.counter = 0

    @classmethod
    def from_key(cls, key: int) -> "CounterRng":
        rng = cls.__new__(cls)
        rng.key = key
        rng.counter = 0
        return rng

    def next_u64(self) -> int:
        v = rand_u64(self.key, self.counter)
        self.counter += 1
        return v

    def uniform(self) -> float:
        return ((self.next_u64() >> 11) + 1) * 2.0**-53

    def bounded(self, n: int) -> int:
        return ((self.next_u64() >> 32) * n) >> 32


# vectorized counterparts (exact same outputs, numpy uint64 arithmetic)

_NP_GAMMA = np.uint64(GAMMA)
_NP_MIX_A = np.uint64(_MIX_A)
_NP_MIX_B = np.uint64(_MIX_B)


def rand_u64_array(key: int, counters: np.ndarray) -> np.ndarray:
    z = (np.uint64(key) + (counters.astype(np.uint64) + np.uint64(1)) * _NP_GAMMA)
    z = (z ^ (z >> np.uint64(30))) * _NP_MIX_A
    z = (z ^ (z >> np.uint64(27))) * _NP_MIX_B
    return z ^ (z >> np.uint64(31))


def rand_unit_array(key: int, counters: np.ndarray) -> np.ndarray:
    return ((rand_u64_array(key, counters) >> np.uint64(11)) + np.uint64(1)).astype(
        np.float64
    ) * 2.0**-53


def rand_bounded_array(key: int, counters: np.ndarray, n: int) -> np.ndarray:
    hi = rand_u64_array(key, counters) >> np.uint64(32)
    return ((hi * np.uint64(n)) >> np.uint64(32)).astype(np.int64)
