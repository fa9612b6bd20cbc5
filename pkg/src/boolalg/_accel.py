"""Optional numba acceleration.

Set ``BOOLALG_NO_NUMBA=1`` to run the pure-numpy kernels instead; the
switch is read once at import time.
"""
from __future__ import annotations

import logging
import os

logger = logging.getLogger(__name__)

NUMBA_ENABLED = False

if os.environ.get("BOOLALG_NO_NUMBA", "").strip() not in ("", "0"):
    logger.debug("numba disabled by BOOLALG_NO_NUMBA")
else:
    try:
        import numba

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        logger.warning("cannot import numba, falling back to numpy kernels")


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, otherwise the identity decorator."""
    if NUMBA_ENABLED:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda func: func
