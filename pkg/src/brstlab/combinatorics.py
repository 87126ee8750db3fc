"""Partitions, fermionic partitions and shifted sequences.

Partitions are stored as weakly decreasing tuples of positive integers.  All
enumerations are in reverse-lexicographic order, so ``(3,)`` comes before
``(2, 1)`` which comes before ``(1, 1, 1)``.  Downstream basis orders inherit
their determinism from this.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable


class Partition(tuple):
    """A weakly decreasing tuple of positive integers."""

    def __new__(cls, parts: Iterable[int] = ()):
        parts = tuple(parts)
        for a, b in zip(parts, parts[1:]):
            if a < b:
                raise ValueError(f"parts must be weakly decreasing: {parts}")
        if parts and parts[-1] < 1:
            raise ValueError(f"parts must be positive: {parts}")
        return super().__new__(cls, parts)

    @property
    def weight(self) -> int:
        return sum(self)

    @property
    def length(self) -> int:
        return len(self)

    def __repr__(self):
        return f"Partition({tuple(self)})"


class FermionicPartition(Partition):
    """A partition whose parts all have multiplicity 0 or 1."""

    def __new__(cls, parts: Iterable[int] = ()):
        parts = tuple(parts)
        for a, b in zip(parts, parts[1:]):
            if a <= b:
                raise ValueError(f"parts must be strictly decreasing: {parts}")
        return super().__new__(cls, parts)

    def __repr__(self):
        return f"FermionicPartition({tuple(self)})"


class ShiftedSequence(tuple):
    """A weakly decreasing integer sequence; entries may be zero or negative.

    Kept distinct from :class:`Partition` so that shifted data cannot be
    passed where a genuine partition is expected.
    """

    def __new__(cls, entries: Iterable[int] = ()):
        entries = tuple(entries)
        for a, b in zip(entries, entries[1:]):
            if a < b:
                raise ValueError(f"entries must be weakly decreasing: {entries}")
        return super().__new__(cls, entries)

    def __repr__(self):
        return f"ShiftedSequence({tuple(self)})"


@lru_cache(maxsize=None)
def _partitions(n: int, max_part: int, min_part: int, distinct: bool) -> tuple:
    if n == 0:
        return ((),)
    out = []
    for first in range(min(n, max_part), min_part - 1, -1):
        cap = first - 1 if distinct else first
        for rest in _partitions(n - first, cap, min_part, distinct):
            out.append((first,) + rest)
    return tuple(out)


def partition_tuples(n: int, min_part: int = 1, distinct: bool = False) -> tuple:
    """Raw tuples of the partitions of ``n`` with all parts >= ``min_part``.

    Cached; used by the basis enumerators where wrapping every tuple would be
    wasted work.
    """
    if n < 0:
        return ()
    return _partitions(n, n, max(min_part, 1), distinct)


def enumerate_partitions(n: int) -> list[Partition]:
    if n < 0:
        raise ValueError("n must be non-negative")
    return [Partition(p) for p in partition_tuples(n)]


def enumerate_fermionic(n: int) -> list[FermionicPartition]:
    if n < 0:
        raise ValueError("n must be non-negative")
    return [FermionicPartition(p) for p in partition_tuples(n, distinct=True)]


def shift(alpha: Iterable[int], m: int) -> ShiftedSequence:
    return ShiftedSequence(a + m for a in alpha)


def multiplicity(alpha: Iterable[int], n: int) -> int:
    if n < 1:
        raise ValueError("n must be a positive integer")
    return sum(1 for a in alpha if a == n)
