"""Kernel backend selection.

Hot loops have two implementations: numba-jitted per-trajectory loops and a
vectorised pure-numpy path.  Set ERGOLAB_BACKEND=numpy to force the fallback;
the default is numba whenever it imports.  ERGOLAB_BACKEND=numba raises if
numba is unavailable.
"""

import os
import warnings

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAS_NUMBA = False

_ENV_VAR = "ERGOLAB_BACKEND"


def _resolve_backend() -> str:
    choice = os.environ.get(_ENV_VAR, "").strip().lower()
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        if not HAS_NUMBA:
            raise ImportError(
                f"{_ENV_VAR}=numba requested but numba is not importable"
            )
        return "numba"
    if choice not in ("", "auto"):
        warnings.warn(f"unknown {_ENV_VAR}={choice!r}, using auto selection")
    if HAS_NUMBA:
        return "numba"
    warnings.warn("numba not available; falling back to pure-numpy kernels")
    return "numpy"


BACKEND = _resolve_backend()
USE_NUMBA = BACKEND == "numba"


def set_num_threads(k: int) -> None:
    """Limit worker threads for the numba lane (no-op on the numpy lane)."""
    if USE_NUMBA and k > 0:
        import numba

        numba.set_num_threads(min(k, numba.config.NUMBA_NUM_THREADS))
