"""Combinatorial ranking/unranking helpers for bit-to-symbol mappings.

All orderings here are deterministic and invertible; they back the codeword
indexing of the pulse-position constellations.
"""

from math import comb


def rank_subset_colex(positions):
    """Colex rank of a k-subset of {0..n-1}, given as a sorted sequence."""
    return sum(comb(c, j + 1) for j, c in enumerate(positions))


def unrank_subset_colex(r, n, k):
    """k-subset of {0..n-1} with colex rank r, returned sorted ascending."""
    out = [0] * k
    while k > 0:
        lo = k - 1
        while lo < n:
            mid = (lo + n + 1) // 2
            if r < comb(mid, k):
                n = mid - 1
            else:
                lo = mid
        r -= comb(n, k)
        k -= 1
        out[k] = n
    return out


def count_multisets(n_items, size):
    """Number of size-`size` multisets drawn from `n_items` item types."""
    return comb(n_items + size - 1, size)


def rank_multiset(items, n_items):
    """Rank of a sorted multiset in combinations_with_replacement order.

    `items` is the nondecreasing tuple of item indices; the order matches
    itertools.combinations_with_replacement(range(n_items), len(items)).
    """
    size = len(items)
    r = 0
    prev = 0
    remaining = size
    for v in items:
        for u in range(prev, v):
            # multisets whose next item is u: rest drawn from {u..n-1}
            r += count_multisets(n_items - u, remaining - 1)
        prev = v
        remaining -= 1
    return r


def unrank_multiset(r, n_items, size):
    """Inverse of rank_multiset; returns the nondecreasing index tuple."""
    out = []
    lo = 0
    remaining = size
    while remaining > 0:
        for v in range(lo, n_items):
            block = count_multisets(n_items - v, remaining - 1)
            if r < block:
                out.append(v)
                lo = v
                remaining -= 1
                break
            r -= block
        else:
            raise ValueError("rank out of range")
    return tuple(out)


class SignedBallCounter:
    """Counts and ranks integer vectors c in Z^m with sum(|c|) <= budget.

    Vectors are additionally constrained to a fixed parity of sum(|c|).
    Ordering is lexicographic on the raw tuples (components compared as
    plain integers, most significant first). Counts are exact (Python ints).
    """

    def __init__(self, m, budget, parity):
        self.m = m
        self.budget = budget
        self.parity = parity & 1
        # table[k][b][p] = #vectors in Z^k, sum|.| <= b, sum|.| == p mod 2
        table = [[[0, 0] for _ in range(budget + 1)] for _ in range(m + 1)]
        for b in range(budget + 1):
            table[0][b][0] = 1
        for k in range(1, m + 1):
            for b in range(budget + 1):
                for p in (0, 1):
                    total = table[k - 1][b][p]
                    for u in range(1, b + 1):
                        total += 2 * table[k - 1][b - u][p ^ (u & 1)]
                    table[k][b][p] = total
        self._table = table

    @property
    def total(self):
        return self._table[self.m][self.budget][self.parity]

    def rank(self, c):
        if len(c) != self.m:
            raise ValueError("vector length mismatch")
        r = 0
        budget = self.budget
        parity = self.parity
        for i, v in enumerate(c):
            if abs(v) > budget:
                raise ValueError("vector outside the ball")
            rest = self.m - 1 - i
            for u in range(-budget, v):
                r += self._table[rest][budget - abs(u)][parity ^ (abs(u) & 1)]
            budget -= abs(v)
            parity ^= abs(v) & 1
        if parity != 0:
            raise ValueError("vector parity mismatch")
        return r

    def unrank(self, r):
        if not 0 <= r < self.total:
            raise ValueError("rank out of range")
        out = []
        budget = self.budget
        parity = self.parity
        for i in range(self.m):
            rest = self.m - 1 - i
            for v in range(-budget, budget + 1):
                block = self._table[rest][budget - abs(v)][parity ^ (abs(v) & 1)]
                if r < block:
                    out.append(v)
                    budget -= abs(v)
                    parity ^= abs(v) & 1
                    break
                r -= block
            else:
                raise ValueError("unrank failed")
        return tuple(out)
