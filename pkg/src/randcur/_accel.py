"""Numba availability switch.

Set ``RANDCUR_DISABLE_NUMBA=1`` to force the pure-numpy kernels even when
numba is importable.  The flag is read once, at import time.
"""
import os

_FLAG = os.environ.get("RANDCUR_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _FLAG not in ("", "0", "false", "no")

try:
    from numba import njit as _numba_njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba_njit = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLED_BY_ENV


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity decorator otherwise.

    The compiled variants are always built when numba exists so the benchmark
    can compare both paths; ``USE_NUMBA`` only decides which one the library
    dispatches to.
    """
    if HAVE_NUMBA:
        return _numba_njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def decorator(func):
        return func
    return decorator
