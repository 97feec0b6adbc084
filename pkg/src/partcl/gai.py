"""Feature-subset bookkeeping across parts.

Parts that share features depend on each other; the dependency graph has
one node per basic part and an edge wherever two parts' feature subsets
intersect. Inference over a single part uses only the features credited
exclusively to it under a fixed part ordering: part k keeps its features
minus everything owned by parts later in the ordering, so every feature is
credited exactly once and the per-part sums reconstruct the full utility.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import ProblemModel


@dataclass(frozen=True)
class GaiNetwork:
    nodes: tuple[int, ...]
    edges: frozenset[tuple[int, int]]   # (p, q) with p < q, shared feature
    degrees: tuple[int, ...]

    def neighbors(self, part: int) -> list[int]:
        out = []
        for p, q in self.edges:
            if p == part:
                out.append(q)
            elif q == part:
                out.append(p)
        return sorted(out)


@dataclass(frozen=True)
class GaiDecomposition:
    ordering: tuple[int, ...]            # part ids, first to last
    J: tuple[frozenset[int], ...]        # aligned with ordering

    def position(self, part: int) -> int:
        return self.ordering.index(part)

    def J_of_part(self, part: int) -> frozenset[int]:
        return self.J[self.position(part)]

    def overlap(self, model: ProblemModel, part: int) -> int:
        """|I_p \\ J_p|: dependencies ignored when inferring this part."""
        return len(model.parts[part].features - self.J_of_part(part))

    def to_json(self, model: ProblemModel) -> dict:
        return {
            "ordering": [model.parts[p].name for p in self.ordering],
            "subsets": [
                {
                    "part": model.parts[p].name,
                    "J": sorted(self.J[k]),
                    "I": sorted(model.parts[p].features),
                    "ignored_dependencies": sorted(
                        model.parts[p].features - self.J[k]),
                }
                for k, p in enumerate(self.ordering)
            ],
        }


def build_gai_network(model: ProblemModel) -> GaiNetwork:
    n = model.num_parts
    edges = set()
    for p in range(n):
        for q in range(p + 1, n):
            if model.parts[p].features & model.parts[q].features:
                edges.add((p, q))
    degrees = [0] * n
    for p, q in edges:
        degrees[p] += 1
        degrees[q] += 1
    return GaiNetwork(nodes=tuple(range(n)), edges=frozenset(edges),
                      degrees=tuple(degrees))


def select_ordering(network: GaiNetwork) -> tuple[int, ...]:
    """Parts by ascending degree; ties broken by ascending part id."""
    return tuple(sorted(network.nodes,
                        key=lambda p: (network.degrees[p], p)))


def compute_J(model: ProblemModel, ordering) -> GaiDecomposition:
    """Credit each feature to the earliest part (in the ordering) able to
    claim it: J_k = I_k minus every later part's subset."""
    ordering = tuple(ordering)
    if sorted(ordering) != list(range(model.num_parts)):
        raise ValueError("ordering must be a permutation of the parts")
    later: frozenset[int] = frozenset()
    J_rev = []
    for p in reversed(ordering):
        J_rev.append(model.parts[p].features - later)
        later = later | model.parts[p].features
    J = tuple(reversed(J_rev))
    return GaiDecomposition(ordering=ordering, J=J)


def decompose(model: ProblemModel, ordering=None) -> GaiDecomposition:
    """Default pipeline: build the network, order by degree, compute J."""
    if ordering is None:
        ordering = select_ordering(build_gai_network(model))
    return compute_J(model, ordering)
