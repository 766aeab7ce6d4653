"""Pure-Python support counting over vertical tid-sets (one big int per item)."""

from __future__ import annotations

from typing import Iterable, Sequence


class TidsetIndex:
    """Bit ``t`` of ``tidsets[i]`` is set when transaction ``t`` holds item ``i``."""

    def __init__(self, transactions: Sequence[Iterable[int]], n_items: int):
        tidsets = [0] * n_items
        for t, items in enumerate(transactions):
            bit = 1 << t
            for i in items:
                tidsets[i] |= bit
        self.tidsets = tidsets
        self.n_transactions = len(transactions)

    def count(self, candidates: Sequence[Sequence[int]]) -> list[int]:
        tidsets = self.tidsets
        everything = (1 << self.n_transactions) - 1
        counts = []
        for cand in candidates:
            acc = everything
            for i in cand:
                acc &= tidsets[i]
                if not acc:
                    break
            counts.append(acc.bit_count())
        return counts
