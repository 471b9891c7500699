"""Runtime selection of the compiled kernels.

Hot numerical loops (geodesic integration, frame ODE stepping, stencil
Christoffels for catalog metrics) are compiled with numba when available.
Setting the environment variable ``NORMALGEO_NO_NUMBA=1`` before import
forces the pure-numpy paths everywhere; the flag is read once because
numba compilation state is process global.
"""

import os

_TRUTHY = {"1", "true", "yes", "on"}

NUMBA_DISABLED = os.environ.get("NORMALGEO_NO_NUMBA", "").strip().lower() in _TRUTHY

if not NUMBA_DISABLED:
    try:
        import numba  # noqa: F401

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - exercised via env flag instead
        HAVE_NUMBA = False
else:
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not NUMBA_DISABLED


def maybe_njit(*args, **kwargs):
    """``numba.njit`` when compiled kernels are enabled, identity otherwise."""
    if USE_NUMBA:
        from numba import njit

        return njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]

    def wrap(func):
        return func

    return wrap
