"""Backend selection for the hot kernels.

Set ``STIFFSTEP_NUMBA=0`` to force the pure-numpy path. Numba is used by
default when it imports cleanly.
"""

import os

_FLAG = os.environ.get("STIFFSTEP_NUMBA", "1").strip().lower()

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

USE_NUMBA = _numba is not None and _FLAG not in ("0", "false", "off", "no")
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(fn):
    """Compile ``fn`` in nopython mode when numba is available.

    The undecorated function stays reachable as ``fn.py_func`` either way so
    tests can compare the interpreted loop against the compiled one.
    """
    if _numba is None:
        fn.py_func = fn
        return fn
    return _numba.njit(cache=True)(fn)
