"""Multiset splitting helpers shared by the recursion engines."""

from __future__ import annotations

import math
from typing import Hashable, Iterator, Sequence, TypeVar

T = TypeVar("T", bound=Hashable)


def sub_multisets(items: Sequence[T]) -> Iterator[tuple[tuple[T, ...], tuple[T, ...], int]]:
    """Yield (subset, complement, count) over sub-multisets of ``items``.

    ``count`` is the number of subsets of the underlying labelled set that
    realize the split, i.e. the product of binomials over repeated values.
    """
    distinct = sorted(set(items), key=repr)
    mults = [list(items).count(v) for v in distinct]

    def rec(i: int, chosen: list[int], count: int):
        if i == len(distinct):
            sub: list[T] = []
            comp: list[T] = []
            for v, m, c in zip(distinct, mults, chosen):
                sub.extend([v] * c)
                comp.extend([v] * (m - c))
            yield tuple(sub), tuple(comp), count
            return
        for c in range(mults[i] + 1):
            yield from rec(i + 1, chosen + [c], count * math.comb(mults[i], c))

    yield from rec(0, [], 1)


def distribute(items: Sequence[T], nfactors: int) -> Iterator[tuple[tuple[tuple[T, ...], ...], int]]:
    """All ways to deal a multiset into ``nfactors`` ordered slots, with the
    Leibniz multiplicity (product of multinomials) of each deal."""
    if nfactors == 0:
        if not items:
            yield (), 1
        return
    distinct = sorted(set(items), key=repr)
    mults = [list(items).count(v) for v in distinct]

    def splits(m: int, parts: int) -> Iterator[tuple[tuple[int, ...], int]]:
        if parts == 1:
            yield (m,), 1
            return
        for first in range(m + 1):
            for tail, c in splits(m - first, parts - 1):
                yield (first,) + tail, math.comb(m, first) * c

    def rec(i: int, alloc: list[tuple[int, ...]], count: int):
        if i == len(distinct):
            per_factor = []
            for f in range(nfactors):
                fl: list[T] = []
                for v, a in zip(distinct, alloc):
                    fl.extend([v] * a[f])
                per_factor.append(tuple(fl))
            yield tuple(per_factor), count
            return
        for split, c in splits(mults[i], nfactors):
            yield from rec(i + 1, alloc + [split], count * c)

    yield from rec(0, [], 1)
