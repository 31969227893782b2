"""Backend switch for the hot numeric kernels.

Set ``HYPERWAVE_NUMBA=0`` to force the pure-numpy code paths. The flag is
read once at import; tests flip backends through :func:`use_numba`.
"""

import functools
import os

try:
    import numba as nb
except ImportError:  # pragma: no cover - numba is a declared dependency
    nb = None

_FLAG = os.environ.get("HYPERWAVE_NUMBA", "1").strip().lower()
_enabled = nb is not None and _FLAG not in ("0", "false", "no", "off")


def numba_available():
    return nb is not None


def numba_enabled():
    return _enabled


def use_numba(flag):
    """Switch backend at runtime; returns the previous setting."""
    global _enabled
    previous = _enabled
    _enabled = bool(flag) and nb is not None
    return previous


if nb is not None:
    njit = functools.partial(nb.njit, cache=True, nogil=True, fastmath=False)
else:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
