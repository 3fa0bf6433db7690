"""Optional numba acceleration.

Set ``YMSTAB_DISABLE_NUMBA=1`` to force the pure-numpy kernels even when
numba is installed.
"""
import os

_FALSY = ("", "0", "false", "no", "off")

DISABLED = os.environ.get("YMSTAB_DISABLE_NUMBA", "0").strip().lower() not in _FALSY

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None and not DISABLED
BACKEND = "numba" if HAVE_NUMBA else "numpy"


def njit(func):
    """Compile `func` with numba when available, otherwise return it unchanged.

    The undecorated function is kept on ``.py_func`` in both cases so that
    tests can run the loop implementation without compilation.
    """
    if numba is None:
        func.py_func = func
        return func
    return numba.njit(cache=True, nogil=True)(func)
