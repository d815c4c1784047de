"""Finite Cayley tree of order 2 and its interaction structures.

Vertices are indexed in level order with the root at 0, so the children of
vertex ``i`` are ``2i + 1`` and ``2i + 2`` and the parent of ``i > 0`` is
``(i - 1) // 2``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

MAX_TREE_DEPTH = 20
SPINS = (1, 2, 3)


class ResourceLimitError(ValueError):
    """Requested size exceeds a materialization cap."""


class TripleDeltaVariant(enum.Enum):
    AVERAGED = "averaged"
    STRICT = "strict"


@dataclass(frozen=True)
class CayleyTree:
    depth: int

    @property
    def n_vertices(self) -> int:
        return 2 ** (self.depth + 1) - 1

    @property
    def vertices(self) -> range:
        return range(self.n_vertices)

    def level(self, x: int) -> int:
        return (x + 1).bit_length() - 1

    def level_vertices(self, m: int) -> range:
        """Vertices of the sphere W_m."""
        if not 0 <= m <= self.depth:
            raise ValueError(f"level {m} outside 0..{self.depth}")
        return range(2**m - 1, 2 ** (m + 1) - 1)

    def parent(self, x: int) -> int | None:
        return None if x == 0 else (x - 1) // 2

    def children(self, x: int) -> tuple[int, ...]:
        if self.level(x) >= self.depth:
            return ()
        return (2 * x + 1, 2 * x + 2)

    @property
    def leaves(self) -> range:
        return self.level_vertices(self.depth)

    @property
    def internal(self) -> range:
        """Vertices with children, i.e. V_{n-1}."""
        return range(0, 2**self.depth - 1)


@dataclass(frozen=True)
class InteractionLists:
    nn_edges: tuple[tuple[int, int], ...]
    second_pairs: tuple[tuple[int, int], ...]
    triples: tuple[tuple[int, int, int], ...]


def build_tree(n: int) -> CayleyTree:
    if isinstance(n, bool) or not isinstance(n, int) or n < 0:
        raise ValueError(f"depth must be a nonnegative integer, got {n!r}")
    if n > MAX_TREE_DEPTH:
        raise ResourceLimitError(f"depth {n} exceeds cap {MAX_TREE_DEPTH}")
    return CayleyTree(n)


def interaction_lists(tree: CayleyTree) -> InteractionLists:
    nn = []
    second = []
    triples = []
    for y in tree.internal:
        x, z = tree.children(y)
        nn.append((y, x))
        nn.append((y, z))
        second.append((x, z))
        triples.append((x, y, z))
    return InteractionLists(tuple(nn), tuple(second), tuple(triples))


def _check_spin(*spins: int) -> None:
    for s in spins:
        if s not in SPINS:
            raise ValueError(f"spin {s!r} not in {SPINS}")


def delta2(a: int, b: int) -> int:
    _check_spin(a, b)
    return int(a == b)


def delta3_twice(x: int, y: int, z: int,
                 variant: TripleDeltaVariant = TripleDeltaVariant.AVERAGED) -> int:
    """Twice the triple Kronecker symbol, as an exact integer in {0, 1, 2}.

    ``y`` is the center of the triple.
    """
    _check_spin(x, y, z)
    if variant is TripleDeltaVariant.STRICT:
        return 2 if x == y == z else 0
    return int(x == y) + int(y == z)


def delta3(x: int, y: int, z: int,
           variant: TripleDeltaVariant = TripleDeltaVariant.AVERAGED) -> Fraction:
    return Fraction(delta3_twice(x, y, z, variant), 2)
