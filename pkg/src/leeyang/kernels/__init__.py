"""Kernel backend selection.

The hot loops have two interchangeable implementations: numba JIT
(`_numba_impl`) and pure numpy (`_numpy_impl`). Set LEEYANG_PURE_NUMPY=1
to force the numpy path; otherwise numba is used when importable.
`benchmarks/bench_kernels.py` times the two side by side.
"""

import os

_FORCE_NUMPY = os.environ.get("LEEYANG_PURE_NUMPY", "").strip() not in ("", "0", "false", "no")

if _FORCE_NUMPY:
    from . import _numpy_impl as _impl
    USING_NUMBA = False
else:
    try:
        from . import _numba_impl as _impl
        USING_NUMBA = True
    except ImportError:  # pragma: no cover - exercised only without numba
        from . import _numpy_impl as _impl
        USING_NUMBA = False

BACKEND = "numba" if USING_NUMBA else "numpy"

brute_histogram = _impl.brute_histogram
chain_histogram = _impl.chain_histogram
chain_transfer_logdd = _impl.chain_transfer_logdd
grid2d_histogram = _impl.grid2d_histogram
grid2d_transfer_logdd = _impl.grid2d_transfer_logdd
trig_grid_eval = _impl.trig_grid_eval
chain_field_eval = _impl.chain_field_eval
metropolis_chains = _impl.metropolis_chains


def set_threads(n):
    """Cap worker threads for parallel JIT kernels (no-op on numpy path)."""
    if USING_NUMBA and n:
        import numba
        numba.set_num_threads(max(1, int(n)))
