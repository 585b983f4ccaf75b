"""Hot sparse kernels: numba-jitted with a pure-numpy fallback.

The backend is picked once at import time from the ``GRAPHMIX_BACKEND``
environment variable: ``numba`` (default when numba imports cleanly) or
``numpy``. Both paths use a fixed per-row reduction order, so results are
bit-reproducible for a given backend; across backends they agree to normal
float64 rounding. Dense matmuls are deliberately left to BLAS.

``benchmarks/kernel_bench.py`` times the two implementations side by side.
"""

from __future__ import annotations

import os

import numpy as np

_ENV_FLAG = "GRAPHMIX_BACKEND"


def spmm_numpy(indptr, indices, values, dense):
    """CSR @ dense via segment sums. Handles empty rows."""
    n_rows = indptr.shape[0] - 1
    out = np.zeros((n_rows, dense.shape[1]), dtype=np.float64)
    if indices.shape[0] == 0:
        return out
    contrib = values[:, None] * dense[indices]
    row_nnz = np.diff(indptr)
    nonempty = row_nnz > 0
    # reduceat segment i spans [start_i, start_{i+1}); empty rows contribute
    # no elements, so passing only the nonempty starts keeps segments exact.
    starts = indptr[:-1][nonempty]
    out[nonempty] = np.add.reduceat(contrib, starts, axis=0)
    return out


def _spmm_python(indptr, indices, values, dense):
    # Loop body shared with the numba twin; kept importable for jit-free use.
    n_rows = indptr.shape[0] - 1
    k = dense.shape[1]
    out = np.zeros((n_rows, k), dtype=np.float64)
    for i in range(n_rows):
        for p in range(indptr[i], indptr[i + 1]):
            v = values[p]
            j = indices[p]
            for c in range(k):
                out[i, c] += v * dense[j, c]
    return out


def _resolve_backend() -> str:
    requested = os.environ.get(_ENV_FLAG, "").strip().lower()
    if requested not in ("", "numba", "numpy"):
        raise ValueError(
            f"{_ENV_FLAG} must be 'numba' or 'numpy', got {requested!r}"
        )
    if requested == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if requested == "numba":
            raise
        return "numpy"
    return "numba"


BACKEND = _resolve_backend()

if BACKEND == "numba":
    from numba import njit

    spmm_numba = njit(cache=True)(_spmm_python)
    spmm = spmm_numba
else:
    spmm_numba = None
    spmm = spmm_numpy


def active_backend() -> str:
    return BACKEND
