"""Kernel backend selection.

The hot numeric kernels in :mod:`enttest.kernels` are written once and
compiled with numba's ``@njit`` by default. Setting ``ENTTEST_BACKEND=numpy``
before import makes ``njit`` a no-op decorator, so the identical source runs
as plain python/numpy: slower, but bit-for-bit the same results. That path
also activates automatically when numba is not importable.

``benchmarks/bench_backends.py`` measures the gap between the two paths.
"""

import os

__all__ = [
    "BACKEND",
    "NUMBA_ENABLED",
    "njit",
    "as_u64",
    "mix64",
    "stream_init",
    "stream_child",
    "next_u64",
    "next_unit",
]

_ENV_VAR = "ENTTEST_BACKEND"
_requested = os.environ.get(_ENV_VAR, "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ValueError(
        f"{_ENV_VAR} must be 'numba' or 'numpy', got {_requested!r}"
    )

NUMBA_ENABLED = False
if _requested == "numba":
    try:
        from numba import njit  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False

if NUMBA_ENABLED:
    import numpy as _np

    from ._bits_numba import (  # noqa: F401
        mix64,
        next_u64,
        next_unit,
        stream_child,
        stream_init,
    )

    def as_u64(x):
        """Coerce a python int (any sign/size) to the kernel key type."""
        return _np.uint64(int(x) & 0xFFFFFFFFFFFFFFFF)

else:

    def njit(*args, **kwargs):  # noqa: D103 - decorator shim
        if args and callable(args[0]):
            return args[0]

        def decorate(func):
            return func

        return decorate

    from ._bits_python import (  # noqa: F401
        mix64,
        next_u64,
        next_unit,
        stream_child,
        stream_init,
    )

    def as_u64(x):
        """Coerce a python int (any sign/size) to the kernel key type."""
        return int(x) & 0xFFFFFFFFFFFFFFFF


BACKEND = "numba" if NUMBA_ENABLED else "numpy"
