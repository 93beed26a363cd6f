"""Numba backend: the same algorithms as ``_numpy`` compiled with ``@njit``."""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@njit(cache=True)
def _lowest_bit(x):
    b = 0
    while not (x >> b) & 1:
        b += 1
    return b


@njit(cache=True)
def _solve(rem, offsets, groups, max_size, memo):
    if rem == 0:
        return 0
    hit = memo[rem]
    if hit >= 0:
        return hit
    n_rem = _popcount(rem)
    lb = (n_rem + max_size - 1) // max_size
    low = _lowest_bit(rem)
    best = n_rem
    for k in range(offsets[low], offsets[low + 1]):
        g = groups[k]
        if g & rem != g:
            continue
        r = rem ^ g
        if 1 + (_popcount(r) + max_size - 1) // max_size >= best:
            continue
        v = 1 + _solve(r, offsets, groups, max_size, memo)
        if v < best:
            best = v
            if best == lb:
                break
    memo[rem] = best
    return best


def min_partition(full, offsets, groups, max_size):
    full = int(full)
    if full == 0:
        return 0
    memo = np.full(1 << full.bit_length(), -1, dtype=np.int16)
    return int(_solve(np.int64(full), np.asarray(offsets, dtype=np.int64),
                      np.asarray(groups, dtype=np.int64), np.int64(max_size), memo))


@njit(cache=True)
def _table(n, groups):
    size = 1 << n
    best = np.empty(size, dtype=np.int16)
    best[0] = 0
    for mask in range(1, size):
        b = 32767
        for g in groups:
            if g & mask == g:
                v = best[mask ^ g] + 1
                if v < b:
                    b = v
        best[mask] = b
    return best


def partition_table(n, groups):
    return _table(np.int64(n), np.asarray(groups, dtype=np.int64))
