"""splitmix64 bit-mixing primitives, pure python.

Python ints are masked to 64 bits after every arithmetic step so the outputs
are bit-identical to the numba twin in ``_bits_numba``.
"""

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB
_TWO53_INV = 1.0 / 9007199254740992.0


def mix64(z):
    z = int(z) & _MASK
    z = ((z ^ (z >> 30)) * _MIX_A) & _MASK
    z = ((z ^ (z >> 27)) * _MIX_B) & _MASK
    return z ^ (z >> 31)


def stream_init(seed):
    return mix64((int(seed) & _MASK) + _GOLDEN)


def stream_child(state, key):
    # bijective in key for a fixed parent state
    return mix64(int(state) + mix64((int(key) & _MASK) + _GOLDEN))


def next_u64(state):
    state = (int(state) + _GOLDEN) & _MASK
    return mix64(state), state


def next_unit(state):
    """Uniform double in the open interval (0, 1)."""
    z, state = next_u64(state)
    return ((z >> 11) + 0.5) * _TWO53_INV, state
