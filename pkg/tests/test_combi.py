"""Ranking/unranking helper properties."""

import itertools
from math import comb

import numpy as np
import pytest

from vlclink._combi import (
    SignedBallCounter,
    count_multisets,
    rank_multiset,
    rank_subset_colex,
    unrank_multiset,
    unrank_subset_colex,
)


class TestSubsetColex:
    def test_roundtrip_all(self):
        for n, k in [(6, 3), (8, 2), (9, 5)]:
            for r in range(comb(n, k)):
                s = unrank_subset_colex(r, n, k)
                assert rank_subset_colex(s) == r
                assert len(s) == k
                assert sorted(set(s)) == s

    def test_order_matches_colex_enumeration(self):
        subsets = sorted(
            itertools.combinations(range(5), 3),
            key=lambda s: tuple(reversed(s)),
        )
        for r, s in enumerate(subsets):
            assert tuple(unrank_subset_colex(r, 5, 3)) == s


class TestMultisets:
    def test_matches_cwr_enumeration(self):
        for n_items, size in [(4, 3), (5, 2), (3, 5)]:
            combos = list(
                itertools.combinations_with_replacement(range(n_items), size)
            )
            assert len(combos) == count_multisets(n_items, size)
            for r, tup in enumerate(combos):
                assert rank_multiset(tup, n_items) == r
                assert unrank_multiset(r, n_items, size) == tup

    def test_rank_out_of_range(self):
        with pytest.raises(ValueError):
            unrank_multiset(count_multisets(3, 2), 3, 2)


class TestSignedBall:
    @pytest.mark.parametrize("m,budget,parity", [(3, 4, 0), (3, 5, 1), (5, 3, 1)])
    def test_roundtrip_and_membership(self, m, budget, parity):
        counter = SignedBallCounter(m, budget, parity)
        seen = set()
        for r in range(counter.total):
            vec = counter.unrank(r)
            assert sum(abs(v) for v in vec) <= budget
            assert sum(abs(v) for v in vec) % 2 == parity
            assert counter.rank(vec) == r
            seen.add(vec)
        assert len(seen) == counter.total

    def test_total_matches_enumeration(self):
        counter = SignedBallCounter(3, 4, 0)
        brute = sum(
            1
            for vec in itertools.product(range(-4, 5), repeat=3)
            if sum(abs(v) for v in vec) <= 4
            and sum(abs(v) for v in vec) % 2 == 0
        )
        assert counter.total == brute

    def test_lexicographic_order(self):
        counter = SignedBallCounter(2, 3, 1)
        vecs = [counter.unrank(r) for r in range(counter.total)]
        assert vecs == sorted(vecs)

    def test_invalid_vectors_rejected(self):
        counter = SignedBallCounter(3, 4, 0)
        with pytest.raises(ValueError):
            counter.rank((4, 1, 0))  # parity mismatch
        with pytest.raises(ValueError):
            counter.rank((5, 0, 0))  # outside the ball
