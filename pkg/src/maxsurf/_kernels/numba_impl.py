"""Numba @njit implementations of the hot kernels.

Mirrors numpy_impl formula-for-formula.  prange loops only write the node
they own and read nodes of the other color, so results are bit-identical
for any thread count.
"""

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True)
def picard_sweeps(u, cE, cW, cN, cS, D, ri, rj, bi, bj, inv_h2, omega, n_sweeps):
    for _ in range(n_sweeps):
        for k in prange(ri.shape[0]):
            i = ri[k]
            j = rj[k]
            lin = (cE[i, j] * u[i + 1, j] + cW[i, j] * u[i - 1, j]
                   + cN[i, j] * u[i, j + 1] + cS[i, j] * u[i, j - 1]) * inv_h2
            u[i, j] = u[i, j] + omega * (lin / D[i, j] - u[i, j])
        for k in prange(bi.shape[0]):
            i = bi[k]
            j = bj[k]
            lin = (cE[i, j] * u[i + 1, j] + cW[i, j] * u[i - 1, j]
                   + cN[i, j] * u[i, j + 1] + cS[i, j] * u[i, j - 1]) * inv_h2
            u[i, j] = u[i, j] + omega * (lin / D[i, j] - u[i, j])
    return u


@njit(cache=True, parallel=True)
def _e2_sigma_flat(x1, x2, n_bisect):
    out = np.empty(x1.shape[0])
    for k in prange(x1.shape[0]):
        a = x1[k]
        b = x2[k]
        lo = -1.0
        for _ in range(80):
            s2 = lo * lo
            if s2 * s2 + 12.0 * s2 - 24.0 * b * lo - 12.0 * a * a > 0.0:
                break
            lo = 2.0 * lo
        hi = 0.0
        for _ in range(n_bisect):
            mid = 0.5 * (lo + hi)
            s2 = mid * mid
            if s2 * s2 + 12.0 * s2 - 24.0 * b * mid - 12.0 * a * a > 0.0:
                lo = mid
            else:
                hi = mid
        out[k] = hi
    return out


def e2_sigma(x1, x2, n_bisect=90):
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    x1b, x2b = np.broadcast_arrays(x1, x2)
    shape = x1b.shape
    out = _e2_sigma_flat(np.ascontiguousarray(x1b).ravel(),
                         np.ascontiguousarray(x2b).ravel(), n_bisect)
    return out.reshape(shape)
