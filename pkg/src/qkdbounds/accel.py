"""Backend selection for the grid-evaluation kernels.

Two interchangeable implementations exist for the hot kernels: a compiled
scalar-loop path (numba) and a vectorized numpy path. The compiled path is
used when numba imports cleanly and the environment does not opt out.

Environment:
  QKD_NO_NUMBA  set to anything except "" or "0" to force the numpy path
  QKD_THREADS   cap the compiled path's thread count
"""

from __future__ import annotations

import os

NUMPY_BACKEND = "numpy"
NUMBA_BACKEND = "numba"


def _env_disabled() -> bool:
    return os.environ.get("QKD_NO_NUMBA", "") not in ("", "0")


_numba_available = False
if not _env_disabled():
    try:
        import numba  # noqa: F401

        _numba_available = True
        threads = os.environ.get("QKD_THREADS", "")
        if threads:
            numba.set_num_threads(max(1, int(threads)))
    except ImportError:
        _numba_available = False


def numba_available() -> bool:
    return _numba_available


def default_backend() -> str:
    return NUMBA_BACKEND if _numba_available else NUMPY_BACKEND


def resolve_backend(backend: str | None) -> str:
    """Validate an explicit backend request or pick the default."""
    if backend is None:
        return default_backend()
    if backend not in (NUMPY_BACKEND, NUMBA_BACKEND):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == NUMBA_BACKEND and not _numba_available:
        raise RuntimeError(
            "numba backend requested but numba is unavailable or disabled "
            "(QKD_NO_NUMBA)"
        )
    return backend
