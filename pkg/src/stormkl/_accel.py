"""Backend switch for the compiled kernels.

Numba is used when it is importable and ``STORMKL_NUMBA`` is not set to a
false value (``0``, ``false``, ``no``, ``off``). Otherwise every kernel in
:mod:`stormkl.kernels` dispatches to its vectorized numpy implementation.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAS_NUMBA = numba is not None


def _env_enabled(value):
    return value.strip().lower() not in {"0", "false", "no", "off"}


USE_NUMBA = HAS_NUMBA and _env_enabled(os.environ.get("STORMKL_NUMBA", "1"))


def njit(func):
    """``numba.njit(cache=True)`` when numba exists, identity otherwise."""
    if numba is None:
        return func
    return numba.njit(cache=True)(func)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
