"""JIT switch for the hot kernels.

Kernels are written in the numba-compatible subset of Python.  Setting
``SETDYN_DISABLE_JIT=1`` (or running without numba installed) leaves them as
plain Python functions over numpy arrays, which is slow but handy for
debugging and for cross-checking the compiled path.
"""

import os

JIT_DISABLED = os.environ.get("SETDYN_DISABLE_JIT", "0").lower() in ("1", "true", "yes")

try:
    if JIT_DISABLED:
        raise ImportError
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    numba = None
    HAS_NUMBA = False


def jit(func):
    """Compile ``func`` in nopython mode when numba is active."""
    if HAS_NUMBA:
        return numba.njit(cache=True, nogil=True)(func)
    return func


def configure_threads():
    """Apply the ``SETDYN_THREADS`` cap (0 or unset means numba's default)."""
    raw = os.environ.get("SETDYN_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        return
    if HAS_NUMBA and n > 0:
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
