"""Optional numba acceleration.

Kernels are written once as plain Python loops and compiled with ``njit``
when numba is importable. Setting ``TWOPHOTON_DISABLE_NUMBA=1`` forces the
vectorized numpy implementations instead.
"""

import os

_DISABLED = os.environ.get("TWOPHOTON_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def decorator(func):
            return func

        if len(args) == 1 and callable(args[0]):
            return args[0]
        return decorator


USE_NUMBA = NUMBA_AVAILABLE and not _DISABLED


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
