"""Part-selection strategies for the elicitation loop."""

from __future__ import annotations

import math

import numpy as np

from .gai import GaiDecomposition
from .model import ProblemModel

KINDS = ("random", "smallest", "ucb1")


class RandomSelection:
    """Uniform over parts; the default (and empirically strongest)."""

    kind = "random"

    def __init__(self, n_parts: int, seed: int = 0):
        self.n_parts = n_parts
        self._rng = np.random.default_rng(seed)

    def select(self) -> int:
        return int(self._rng.integers(self.n_parts))

    def record(self, part: int, reward: float) -> None:
        pass


class SmallestFirstSelection:
    """Cyclic sweep over parts ordered by how few dependencies the
    decomposition ignores for them (|I_p \\ J_p| ascending, id ties)."""

    kind = "smallest"

    def __init__(self, model: ProblemModel, decomposition: GaiDecomposition):
        self.order = sorted(
            range(model.num_parts),
            key=lambda p: (decomposition.overlap(model, p), p))
        self._i = 0

    def select(self) -> int:
        part = self.order[self._i % len(self.order)]
        self._i += 1
        return part

    def record(self, part: int, reward: float) -> None:
        pass


class Ucb1Selection:
    """UCB1 over parts with the normalized estimated utility gain as reward."""

    kind = "ucb1"

    def __init__(self, n_parts: int, c: float = 1.0, seed: int = 0):
        self.n_parts = n_parts
        self.c = c
        self.counts = np.zeros(n_parts, dtype=np.int64)
        self.sums = np.zeros(n_parts)

    def indices(self) -> np.ndarray:
        t = int(self.counts.sum())
        means = self.sums / np.maximum(self.counts, 1)
        bonus = self.c * np.sqrt(2.0 * math.log(max(t, 1)) / np.maximum(self.counts, 1))
        return means + bonus

    def select(self) -> int:
        for p in range(self.n_parts):
            if self.counts[p] == 0:
                return p
        return int(np.argmax(self.indices()))

    def record(self, part: int, reward: float) -> None:
        self.counts[part] += 1
        self.sums[part] += reward


def make_strategy(kind: str, model: ProblemModel,
                  decomposition: GaiDecomposition, seed: int = 0,
                  c: float = 1.0):
    if kind == "random":
        return RandomSelection(model.num_parts, seed)
    if kind == "smallest":
        return SmallestFirstSelection(model, decomposition)
    if kind == "ucb1":
        return Ucb1Selection(model.num_parts, c=c)
    raise ValueError(f"unknown selection strategy {kind!r}")
