"""Seedable, splittable 64-bit random number generation.

The generator is splitmix64: the state advances by a fixed odd increment
(the golden-ratio constant) and each output is a finalizer hash of the
state.  It is trivially portable, passes standard statistical batteries,
and makes sub-stream derivation explicit: the sub-seed for replication j
of a run seeded with s is mix64(s + (j + 1) * GOLDEN), i.e. output j of
the splitmix64 stream seeded at s.  Identical seeds therefore give
bit-identical simulations on every platform.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["derive_seed", "uniform", "geometric", "make_state", "GOLDEN"]

GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1

_U = np.uint64
_G = _U(GOLDEN)
_K1 = _U(0xBF58476D1CE4E5B9)
_K2 = _U(0x94D049BB133111EB)


def mix64(z: int) -> int:
    """splitmix64 finalizer on a plain integer (mod 2^64)."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def derive_seed(seed: int, index: int) -> int:
    """Deterministic decorrelated sub-seed: stream output `index` of `seed`."""
    if index < 0:
        raise ValueError("index must be non-negative")
    return mix64(seed + (index + 1) * GOLDEN)


def make_state(seed: int) -> np.ndarray:
    """Mutable generator state holding the current splitmix64 counter."""
    return np.array([seed & _MASK], dtype=np.uint64)


@njit(cache=True, inline="always")
def _next_u64(state):
    state[0] = state[0] + _G
    z = state[0]
    z = (z ^ (z >> _U(30))) * _K1
    z = (z ^ (z >> _U(27))) * _K2
    return z ^ (z >> _U(31))


@njit(cache=True, inline="always")
def uniform(state):
    """Uniform double in (0, 1]; never 0, so log(u) is always finite."""
    return (np.float64(_next_u64(state) >> _U(11)) + 1.0) * (1.0 / 9007199254740992.0)


@njit(cache=True, inline="always")
def geometric(state, log1m_p):
    """Geometric gap >= 1 with success probability p; pass log1m_p = log(1-p)."""
    g = np.int64(np.floor(np.log(uniform(state)) / log1m_p)) + 1
    return g if g >= 1 else np.int64(1)
