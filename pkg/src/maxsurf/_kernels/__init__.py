"""Hot-kernel dispatch: numba implementation with a numpy fallback.

See maxsurf._backend for the env-flag contract (MAXSURF_BACKEND,
MAXSURF_THREADS).  benchmarks/bench_kernels.py compares the two.
"""

from .._backend import backend

if backend() == "numba":
    from .numba_impl import picard_sweeps, e2_sigma
else:
    from .numpy_impl import picard_sweeps, e2_sigma

__all__ = ["picard_sweeps", "e2_sigma", "backend"]
