"""
Index arithmetic and enumeration primitives.

All indices are 1-based. Sets are returned as sorted tuples so that results
are hashable, deterministic and cheap to compare; ordered windows are tuples
in window order.
"""
from __future__ import annotations

import itertools
from collections.abc import Iterable, Sequence

from .errors import DomainError

__all__ = [
    "mod_add",
    "shift_set",
    "circular_permutations",
    "perm_window",
    "k_subsets",
    "arrangements",
]


def mod_add(i: int, j: int, m: int) -> int:
    """Cyclic addition on ``{1, ..., m}``: ``1 + ((i + j - 1) mod m)``.

    Examples
    --------
    >>> mod_add(3, 1, 3)
    1
    >>> mod_add(2, 2, 3)
    1
    """
    if m < 1:
        raise DomainError(f"ground set size must be positive, got m={m}")
    if not 1 <= i <= m:
        raise DomainError(f"index {i} outside [1, {m}]")
    if j < 0:
        raise DomainError(f"shift must be nonnegative, got {j}")
    return 1 + (i + j - 1) % m


def shift_set(T: Iterable[int], j: int, m: int) -> tuple[int, ...]:
    """Shift every element of ``T`` by ``j`` cyclically; returns a sorted tuple."""
    return tuple(sorted(mod_add(i, j, m) for i in T))


def circular_permutations(R: Iterable[int]) -> list[tuple[int, ...]]:
    """All ``(|R|-1)!`` circular arrangements of ``R``.

    Each arrangement is given in its canonical rotation, i.e. starting at
    ``min(R)``; the output is sorted lexicographically.

    >>> circular_permutations({1, 2, 3})
    [(1, 2, 3), (1, 3, 2)]
    """
    items = sorted(set(R))
    if not items:
        raise DomainError("circular permutations of an empty set are undefined")
    head, rest = items[0], items[1:]
    return [(head,) + p for p in itertools.permutations(rest)]


def perm_window(pi: Sequence[int], i: int, j: int) -> tuple[int, ...]:
    """Cyclic window ``[pi(i), pi(i+1), ..., pi(j)]`` with wrap-around.

    ``pi`` is 1-indexed in the mathematical sense: ``pi(1)`` is ``pi[0]``.
    ``j = i - 1`` yields the empty window.
    """
    m = len(pi)
    length = j - i + 1
    if length < 0:
        raise DomainError(f"window end {j} precedes start {i} by more than one")
    if length > m:
        raise DomainError(f"window length {length} exceeds permutation length {m}")
    if length == 0:
        return ()
    # i may exceed m (e.g. l + t_R + 1); reduce it before applying mod_add
    start = 1 + (i - 1) % m
    return tuple(pi[mod_add(start, k, m) - 1] for k in range(length))


def k_subsets(m: int, k: int) -> list[tuple[int, ...]]:
    """All ``k``-element subsets of ``[m]`` in lexicographic order."""
    if m < 0 or k < 0:
        raise DomainError(f"k_subsets needs nonnegative arguments, got ({m}, {k})")
    if k > m:
        raise DomainError(f"cannot choose {k} elements out of {m}")
    return list(itertools.combinations(range(1, m + 1), k))


def arrangements(S: Iterable[int], t: int) -> list[tuple[int, ...]]:
    """Ordered ``t``-tuples of distinct elements of ``S`` (all permutations of
    all ``t``-subsets), lexicographic."""
    items = sorted(set(S))
    if not 0 <= t <= len(items):
        raise DomainError(f"cannot arrange {t} out of {len(items)} elements")
    return list(itertools.permutations(items, t))
