"""Numba availability and the pure-numpy fallback switch.

Set ``QJETDIFF_DISABLE_NUMBA=1`` before importing the package to force the
pure-numpy kernels, e.g. for debugging or on platforms without numba.
"""
import os

_DISABLED = os.environ.get("QJETDIFF_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional extra
    _njit = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLED


def njit(fn):
    """Compile ``fn`` in nopython mode when numba is importable.

    Compilation is lazy, so merely importing a module costs nothing when the
    numpy path is selected.
    """
    if not HAVE_NUMBA:
        return fn
    return _njit(cache=True)(fn)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
