"""Backend selection for the hot kernels.

Two implementations of the inner loops exist: a numba @njit one and a pure
numpy one.  ``MAXSURF_BACKEND`` picks between them ("numba" / "numpy"); unset
means numba when importable, numpy otherwise.  ``MAXSURF_THREADS`` caps the
numba thread pool (0 or unset = numba's default).  Both kernels perform the
same arithmetic per node, so results agree to the last few ulps and each
backend is bitwise deterministic for any thread count.
"""

import os

_BACKEND = None


def _detect() -> str:
    choice = os.environ.get("MAXSURF_BACKEND", "").strip().lower()
    if choice in ("numba", "numpy"):
        if choice == "numba" and not _numba_available():
            raise RuntimeError("MAXSURF_BACKEND=numba but numba is not importable")
        return choice
    if choice not in ("", "auto"):
        raise RuntimeError(f"MAXSURF_BACKEND must be 'numba' or 'numpy', got {choice!r}")
    return "numba" if _numba_available() else "numpy"


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
        return True
    except ImportError:
        return False


def backend() -> str:
    """Resolved backend name, cached after first call."""
    global _BACKEND
    if _BACKEND is None:
        _BACKEND = _detect()
        if _BACKEND == "numba":
            _apply_thread_cap()
    return _BACKEND


def _apply_thread_cap():
    raw = os.environ.get("MAXSURF_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise RuntimeError(f"MAXSURF_THREADS must be an integer, got {raw!r}")
    if n > 0:
        import numba
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
