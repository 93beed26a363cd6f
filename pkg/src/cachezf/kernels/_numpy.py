"""Pure-numpy backend (no JIT)."""
from __future__ import annotations

import numpy as np


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def min_partition(full: int, offsets: np.ndarray, groups: np.ndarray, max_size: int) -> int:
    offsets = [int(x) for x in offsets]
    groups = [int(x) for x in groups]
    memo: dict[int, int] = {0: 0}

    def solve(rem: int) -> int:
        hit = memo.get(rem)
        if hit is not None:
            return hit
        n_rem = rem.bit_count()
        lb = _ceil_div(n_rem, max_size)
        low = (rem & -rem).bit_length() - 1
        best = n_rem  # singletons are always feasible
        for k in range(offsets[low], offsets[low + 1]):
            g = groups[k]
            if g & rem != g:
                continue
            r = rem ^ g
            if 1 + _ceil_div(r.bit_count(), max_size) >= best:
                continue
            v = 1 + solve(r)
            if v < best:
                best = v
                if best == lb:
                    break
        memo[rem] = best
        return best

    return solve(int(full))


def partition_table(n: int, groups: np.ndarray) -> np.ndarray:
    size = 1 << n
    masks = np.arange(size, dtype=np.int64)
    pop = np.zeros(size, dtype=np.int64)
    for b in range(n):
        pop += (masks >> b) & 1
    groups = np.asarray(groups, dtype=np.int64)
    gpop = np.array([int(g).bit_count() for g in groups], dtype=np.int64)
    best = np.full(size, np.iinfo(np.int16).max, dtype=np.int16)
    best[0] = 0
    # best[mask ^ g] is final before layer popcount(mask) is processed
    for k in range(1, n + 1):
        layer = masks[pop == k]
        for g, gp in zip(groups, gpop):
            if gp > k:
                continue
            sub = layer[(layer & g) == g]
            if sub.size:
                best[sub] = np.minimum(best[sub], best[sub ^ g] + 1)
    return best
