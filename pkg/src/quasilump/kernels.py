"""Backend selection for the hot kernels.

The compiled extension is preferred. Set ``QUASILUMP_PURE=1`` in the
environment to force the numpy fallback (useful for debugging and for the
backend comparison benchmark).
"""
import os

import numpy as np

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("QUASILUMP_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # noqa: F811
    except ImportError:
        _impl = _fallback
    else:
        BACKEND = "compiled"


def compiled_available():
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        return False
    return True


def ergodic_coefficient(M):
    M = np.ascontiguousarray(M, dtype=np.float64)
    if M.shape[0] < 2:
        return 0.0
    return float(_impl.ergodic_coefficient(M))


def cumulative_rows(P):
    """Row-wise inverse-CDF tables for categorical sampling.

    Each row is normalized so its final positive entry maps to exactly 1.0,
    which keeps zero-probability columns unreachable for draws in [0, 1).
    """
    P = np.asarray(P, dtype=np.float64)
    n = P.shape[1]
    cum = np.cumsum(P, axis=1)
    cum /= cum[:, -1:]
    last = n - 1 - np.argmax(P[:, ::-1] > 0, axis=1)
    cum[np.arange(n)[None, :] >= last[:, None]] = 1.0
    return np.ascontiguousarray(cum)


def advance_walkers(states, cum, u, block_of, counts):
    """Move every walker one step in place and add block occupancy to counts.

    ``states`` and ``block_of`` are int64, ``u`` holds one uniform draw in
    [0, 1) per walker, ``counts`` is an int64 vector of length m.
    """
    _impl.advance_walkers(states, cum, u, block_of, counts)
