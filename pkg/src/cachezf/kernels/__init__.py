"""
Bitmask set-partition kernels behind the exact converse solver.

Two interchangeable backends implement the same functions:

``min_partition(full, offsets, groups, max_size)``
    Top-down memoized search with branch-and-bound for the minimum number of
    feasible groups partitioning ``full``. Groups are bitmasks bucketed by
    their lowest set bit (CSR layout: ``groups[offsets[b]:offsets[b+1]]``).
``partition_table(n, groups)``
    Exhaustive bottom-up table ``best[mask]`` over all ``2**n`` subsets,
    trying every feasible group at every mask with no pruning.

The numba backend is used when numba imports; set ``CACHEZF_DISABLE_NUMBA=1``
to force the pure-numpy one.
"""
from __future__ import annotations

import os

from . import _numpy as numpy_backend

numba_backend = None
if os.environ.get("CACHEZF_DISABLE_NUMBA", "").strip().lower() not in ("1", "true", "yes"):
    try:
        from . import _numba as numba_backend
    except ImportError:  # pragma: no cover - numba missing
        numba_backend = None

backend = numba_backend if numba_backend is not None else numpy_backend
BACKEND_NAME = "numba" if backend is numba_backend else "numpy"

min_partition = backend.min_partition
partition_table = backend.partition_table

__all__ = ["min_partition", "partition_table", "backend", "BACKEND_NAME",
           "numba_backend", "numpy_backend"]
