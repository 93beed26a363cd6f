import numpy as np
import pytest
from hypothesis import given, strategies as st

from cachezf import kernels
from cachezf.kernels import _numpy

backends = [_numpy]
if kernels.numba_backend is not None:
    backends.append(kernels.numba_backend)


def _csr(n, groups):
    buckets = [[] for _ in range(n)]
    for g in groups:
        buckets[(g & -g).bit_length() - 1].append(g)
    offsets = np.zeros(n + 1, dtype=np.int64)
    flat = []
    for b, bucket in enumerate(buckets):
        flat.extend(sorted(bucket, key=lambda g: -bin(g).count("1")))
        offsets[b + 1] = len(flat)
    return offsets, np.array(flat, dtype=np.int64)


group_families = st.integers(1, 9).flatmap(lambda n: st.tuples(
    st.just(n), st.lists(st.integers(1, (1 << n) - 1), max_size=25)))


@given(group_families)
def test_backends_agree(case):
    n, extra = case
    groups = sorted(set(extra) | {1 << k for k in range(n)})
    offsets, flat = _csr(n, groups)
    max_size = max(bin(g).count("1") for g in groups)
    full = (1 << n) - 1
    results = {b.__name__: b.min_partition(full, offsets, flat, max_size) for b in backends}
    tables = [b.partition_table(n, np.array(groups, dtype=np.int64)) for b in backends]
    assert len(set(results.values())) == 1
    assert all(int(t[full]) == next(iter(results.values())) for t in tables)
    for t in tables[1:]:
        assert np.array_equal(t, tables[0])


def test_table_values():
    # groups {0,1}, {2} and singletons over 3 items
    groups = np.array([0b011, 0b001, 0b010, 0b100], dtype=np.int64)
    for b in backends:
        t = b.partition_table(3, groups)
        assert list(t) == [0, 1, 1, 1, 1, 2, 2, 2]


def test_empty_mask():
    offsets, flat = _csr(1, [1])
    for b in backends:
        assert b.min_partition(0, offsets, flat, 1) == 0


def test_backend_selection():
    assert kernels.BACKEND_NAME in ("numba", "numpy")
    assert kernels.min_partition is kernels.backend.min_partition


def test_env_flag_forces_numpy():
    import subprocess, sys, os
    env = {**os.environ, "CACHEZF_DISABLE_NUMBA": "1"}
    out = subprocess.run([sys.executable, "-c", "from cachezf import kernels; print(kernels.BACKEND_NAME)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
