"""Part-selection strategies."""

import math

import numpy as np
import pytest

from partcl.gai import decompose
from partcl.selection import (RandomSelection, SmallestFirstSelection,
                              Ucb1Selection, make_strategy)


class TestRandom:
    def test_uniform_frequencies(self):
        n = 4
        strat = RandomSelection(n, seed=42)
        draws = 10_000
        counts = np.zeros(n)
        for _ in range(draws):
            counts[strat.select()] += 1
        p = 1.0 / n
        sigma = math.sqrt(draws * p * (1 - p))
        for c in counts:
            assert abs(c - draws * p) <= 3 * sigma

    def test_single_part(self):
        strat = RandomSelection(1, seed=0)
        assert all(strat.select() == 0 for _ in range(20))

    def test_record_is_identity(self):
        strat = RandomSelection(3, seed=1)
        before = strat._rng.bit_generator.state
        strat.record(0, 0.7)
        assert strat._rng.bit_generator.state == before

    def test_deterministic_given_seed(self):
        s1 = RandomSelection(5, seed=9)
        s2 = RandomSelection(5, seed=9)
        assert [s1.select() for _ in range(50)] == [s2.select() for _ in range(50)]


class TestSmallestFirst:
    def test_grid_most_independent_part_first(self, grid):
        dec = decompose(grid)
        strat = SmallestFirstSelection(grid, dec)
        # overlaps are (4, 2, 2, 0): part 3 first, then 1, 2, then 0
        assert strat.select() == 3
        assert strat.order == [3, 1, 2, 0]

    def test_cyclic_sweep(self, grid):
        strat = SmallestFirstSelection(grid, decompose(grid))
        seq = [strat.select() for _ in range(8)]
        assert seq == [3, 1, 2, 0, 3, 1, 2, 0]


class TestUcb1:
    def test_bootstrap_visits_every_part_once(self):
        strat = Ucb1Selection(5)
        seen = []
        for _ in range(5):
            p = strat.select()
            seen.append(p)
            strat.record(p, 0.0)
        assert seen == [0, 1, 2, 3, 4]

    def test_index_formula(self):
        strat = Ucb1Selection(3, c=1.0)
        rewards = {0: [0.2, 0.4], 1: [0.9], 2: [0.1, 0.1, 0.5]}
        for p, rs in rewards.items():
            for r in rs:
                strat.record(p, r)
        t = sum(len(rs) for rs in rewards.values())
        idx = strat.indices()
        for p, rs in rewards.items():
            mean = sum(rs) / len(rs)
            bonus = math.sqrt(2.0 * math.log(t) / len(rs))
            assert abs(idx[p] - (mean + bonus)) <= 1e-12

    def test_equal_rewards_explore_evenly(self):
        strat = Ucb1Selection(4)
        counts = np.zeros(4)
        for _ in range(1000):
            p = strat.select()
            counts[p] += 1
            strat.record(p, 0.0)
        assert counts.max() - counts.min() <= 2

    def test_rewarding_part_selected_most(self):
        strat = Ucb1Selection(4, c=1.0)
        counts = np.zeros(4)
        for _ in range(1000):
            p = strat.select()
            counts[p] += 1
            strat.record(p, 0.8 if p == 2 else 0.1)
        assert counts[2] == counts.max()
        assert counts[2] > max(counts[i] for i in (0, 1, 3))


def test_make_strategy_rejects_unknown(grid):
    with pytest.raises(ValueError):
        make_strategy("bogus", grid, decompose(grid))
