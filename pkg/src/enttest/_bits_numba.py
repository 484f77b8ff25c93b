"""splitmix64 bit-mixing primitives, numba-compiled.

Relies on uint64 wraparound; the pure-python twin in ``_bits_python`` must
produce bit-identical outputs (see tests/test_backend.py).
"""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_A = np.uint64(0xBF58476D1CE4E5B9)
_MIX_B = np.uint64(0x94D049BB133111EB)
_TWO53_INV = 1.0 / 9007199254740992.0


@njit(cache=True)
def mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX_A
    z = (z ^ (z >> np.uint64(27))) * _MIX_B
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def stream_init(seed):
    return mix64(seed + _GOLDEN)


@njit(cache=True)
def stream_child(state, key):
    # bijective in key for a fixed parent state
    return mix64(state + mix64(key + _GOLDEN))


@njit(cache=True)
def next_u64(state):
    state = state + _GOLDEN
    return mix64(state), state


@njit(cache=True)
def next_unit(state):
    """Uniform double in the open interval (0, 1)."""
    z, state = next_u64(state)
    return (np.float64(z >> np.uint64(11)) + 0.5) * _TWO53_INV, state
