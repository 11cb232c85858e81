"""Backend selection for the hot kernels.

Set ``SLKL_DISABLE_NUMBA=1`` to run every kernel as plain numpy code. The
kernels are written in the subset of numpy that numba understands, so the
same source serves both paths.
"""
import os
import warnings

_DISABLED = os.environ.get("SLKL_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

USING_NUMBA = False
if not _DISABLED:
    try:
        import numba as _nb

        USING_NUMBA = True
    except ImportError:  # pragma: no cover - depends on environment
        warnings.warn("numba not found, falling back to the numpy kernels.")


def njit(func):
    """``numba.njit(cache=True)`` when numba is active, identity otherwise."""
    if USING_NUMBA:
        return _nb.njit(cache=True)(func)
    return func


def backend_name():
    return "numba" if USING_NUMBA else "numpy"
