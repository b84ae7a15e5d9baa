"""Counter-based Philox4x32-10 generator usable inside numba kernels.

A draw is a pure function of ``(key, counter)``, so every trial of a
simulation owns the stream ``counter = (event, trial)`` under
``key = seed`` and results do not depend on thread scheduling.
"""
import numpy as np
from numba import njit, uint32, uint64

M0 = np.uint64(0xD2511F53)
M1 = np.uint64(0xCD9E8D57)
W0 = np.uint32(0x9E3779B9)
W1 = np.uint32(0xBB67AE85)
MASK32 = np.uint64(0xFFFFFFFF)


@njit(cache=True, inline="always")
def _round(c0, c1, c2, c3, k0, k1):
    p0 = M0 * uint64(c0)
    p1 = M1 * uint64(c2)
    hi0, lo0 = uint32(p0 >> uint64(32)), uint32(p0 & MASK32)
    hi1, lo1 = uint32(p1 >> uint64(32)), uint32(p1 & MASK32)
    return hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0


@njit(cache=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten Philox rounds on one 128-bit counter block."""
    c0, c1, c2, c3 = uint32(c0), uint32(c1), uint32(c2), uint32(c3)
    k0, k1 = uint32(k0), uint32(k1)
    for r in range(10):
        if r > 0:
            k0 = uint32(k0 + W0)
            k1 = uint32(k1 + W1)
        c0, c1, c2, c3 = _round(c0, c1, c2, c3, k0, k1)
    return c0, c1, c2, c3


@njit(cache=True, inline="always")
def _to_unit(hi, lo):
    # 53-bit double in [0, 1)
    return ((uint64(hi) >> uint64(5)) * 67108864.0
            + (uint64(lo) >> uint64(6))) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def uniform_pair(seed, trial, event):
    """Two independent U[0, 1) doubles for ``event`` of ``trial``."""
    s = uint64(seed)
    t = uint64(trial)
    e = uint64(event)
    r0, r1, r2, r3 = philox4x32(uint32(e & MASK32), uint32(e >> uint64(32)),
                                uint32(t & MASK32), uint32(t >> uint64(32)),
                                uint32(s & MASK32), uint32(s >> uint64(32)))
    return _to_unit(r0, r1), _to_unit(r2, r3)


def philox_block(counter, key):
    """Python wrapper returning the four output words of one block."""
    out = philox4x32(*[int(c) for c in counter], *[int(k) for k in key])
    return tuple(int(v) for v in out)
