"""Pure numpy implementations of the hot kernels.

Used when the compiled ``_kernels`` extension is unavailable or when
``QUASILUMP_PURE=1`` is set. Signatures match the compiled counterparts.
Walker stepping is bit-identical across backends; the ergodic coefficient
agrees up to summation-order rounding.
"""
import numpy as np


def ergodic_coefficient(M):
    n = M.shape[0]
    best = 0.0
    for i in range(n - 1):
        d = np.abs(M[i + 1:] - M[i]).sum(axis=1)
        best = max(best, float(d.max()))
    return 0.5 * best


def advance_walkers(states, cum, u, block_of, counts):
    if u.shape[0] != states.shape[0]:
        raise ValueError("one uniform draw per walker is required")
    n = cum.shape[1]
    order = np.argsort(states, kind="stable")
    edges = np.searchsorted(states[order], np.arange(n + 1))
    new = np.empty_like(states)
    for s in np.flatnonzero(np.diff(edges)):
        idx = order[edges[s]:edges[s + 1]]
        new[idx] = np.searchsorted(cum[s], u[idx], side="right")
    states[:] = new
    counts += np.bincount(block_of[new], minlength=counts.shape[0])
