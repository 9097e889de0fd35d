"""Optional numba acceleration.

Set ``MBVLGC_DISABLE_NUMBA=1`` to force the pure-numpy kernels. When numba is
not importable the numpy path is used automatically.
"""
import logging
import os

logger = logging.getLogger(__name__)


def _noop_njit(*args, **kwargs):
    if args and callable(args[0]):
        return args[0]

    def decorator(func):
        return func

    return decorator


def _env_disabled():
    return os.environ.get("MBVLGC_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}


try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = _noop_njit
    HAVE_NUMBA = False

# True when the compiled kernels are the default dispatch target
USE_NUMBA = HAVE_NUMBA and not _env_disabled()

if HAVE_NUMBA and not USE_NUMBA:
    logger.debug("numba disabled via MBVLGC_DISABLE_NUMBA; using numpy kernels")
