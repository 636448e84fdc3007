"""Backend dispatch for the hot enumeration kernels.

Two interchangeable implementations exist: a numba-jitted one and a pure
numpy one.  Set PRLOCUS_DISABLE_NUMBA=1 to force the numpy path; otherwise
numba is used when importable.  Both expose the same functions:

    count_flag_matrices(q) -> (constrained_count, scanned)
    solve_affine(q, nvars, eq_idx, coeffs, expos) -> int64 array (n_sol, nvars)
"""

from __future__ import annotations

import os

_BACKEND = None


def _numba_available() -> bool:
    if os.environ.get("PRLOCUS_DISABLE_NUMBA"):
        return False
    try:
        import numba  # noqa: F401
    except Exception:
        return False
    return True


def get_backend(force=None):
    """The active kernel module; force in {"numpy", "numba"} overrides."""
    global _BACKEND
    if force == "numpy":
        from . import numpy_impl

        return numpy_impl
    if force == "numba":
        from . import numba_impl

        return numba_impl
    if force is not None:
        raise ValueError(f"unknown backend {force!r}")
    if _BACKEND is None:
        if _numba_available():
            from . import numba_impl as impl
        else:
            from . import numpy_impl as impl
        _BACKEND = impl
    return _BACKEND


def backend_name() -> str:
    return get_backend().NAME
