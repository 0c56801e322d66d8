"""Pure-numpy fallback implementations of the hot kernels.

Kept in lockstep with numba_impl: same update formulas, same operation
order, so the two backends agree to the last few ulps.
"""

import numpy as np


def picard_sweeps(u, cE, cW, cN, cS, D, ri, rj, bi, bj, inv_h2, omega, n_sweeps):
    """Red-black SOR sweeps on the frozen-coefficient 5-point system.

    Updates ``u`` in place.  Within one color all updates read the same
    field state (5-point stencil: same-color nodes never couple), so a
    vectorized simultaneous update equals the sequential one.
    """
    for _ in range(n_sweeps):
        for ci, cj in ((ri, rj), (bi, bj)):
            lin = (cE[ci, cj] * u[ci + 1, cj] + cW[ci, cj] * u[ci - 1, cj]
                   + cN[ci, cj] * u[ci, cj + 1] + cS[ci, cj] * u[ci, cj - 1]) * inv_h2
            u[ci, cj] = u[ci, cj] + omega * (lin / D[ci, cj] - u[ci, cj])
    return u


def e2_sigma(x1, x2, n_bisect=90):
    """Most negative real root of s^4 + 12 s^2 - 24*x2*s - 12*x1^2 = 0.

    The quartic is convex, so the smallest real root is the unique one in
    (-inf, 0]; it is found by fixed-count bisection (deterministic).
    """
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)

    def p(s):
        s2 = s * s
        return s2 * s2 + 12.0 * s2 - 24.0 * x2 * s - 12.0 * x1 * x1

    lo = np.full(np.broadcast(x1, x2).shape, -1.0)
    for _ in range(80):
        mask = p(lo) <= 0.0
        if not mask.any():
            break
        lo = np.where(mask, 2.0 * lo, lo)
    hi = np.zeros_like(lo)
    for _ in range(n_bisect):
        mid = 0.5 * (lo + hi)
        pos = p(mid) > 0.0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    return hi
