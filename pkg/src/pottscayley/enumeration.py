"""Brute-force partition functions by enumerating every spin configuration.

This is deliberately the dumb path: it knows nothing about the recursion and
exists to check it.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .model import FREE, BoundarySpec, ModelParams
from .tree import (
    ResourceLimitError,
    TripleDeltaVariant,
    build_tree,
    interaction_lists,
)

MAX_ENUM_DEPTH = 3
DEFAULT_ENUM_DEPTH = 2


@dataclass(frozen=True)
class PartitionVector:
    """Root-spin-resolved log partition functions (log Z1, log Z2, log Z3)."""

    logZ1: float
    logZ2: float
    logZ3: float

    @classmethod
    def from_array(cls, a) -> "PartitionVector":
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.logZ1, self.logZ2, self.logZ3])

    @property
    def logZ(self) -> float:
        return float(logsumexp(self.as_array()))

    def marginal(self) -> np.ndarray:
        a = self.as_array()
        return np.exp(a - logsumexp(a))

    def ratios(self) -> tuple[float, float]:
        """(Z2/Z1, Z3/Z1)."""
        return math.exp(self.logZ2 - self.logZ1), math.exp(self.logZ3 - self.logZ1)


def _digits(count: int, width: int) -> np.ndarray:
    """All base-3 words of the given width as spins 1..3, shape (count, width)."""
    idx = np.arange(count, dtype=np.int64)
    out = np.empty((count, width), dtype=np.int8)
    for k in range(width - 1, -1, -1):
        out[:, k] = idx % 3
        idx //= 3
    return out + 1


def _shard_logsum(n: int, params: ModelParams, boundary: BoundarySpec,
                  variant: TripleDeltaVariant, root: int, left: int, right: int) -> float:
    tree = build_tree(n)
    lists = interaction_lists(tree)
    n_vert = tree.n_vertices
    fixed = [root, left, right][:n_vert]
    rest = n_vert - len(fixed)
    count = 3**rest
    sigma = np.empty((count, n_vert), dtype=np.int8)
    sigma[:, : len(fixed)] = fixed
    if rest:
        sigma[:, len(fixed):] = _digits(count, rest)

    nn = np.zeros(count, dtype=np.int64)
    for x, y in lists.nn_edges:
        nn += sigma[:, x] == sigma[:, y]
    second = np.zeros(count, dtype=np.int64)
    for x, y in lists.second_pairs:
        second += sigma[:, x] == sigma[:, y]
    triple2 = np.zeros(count, dtype=np.int64)
    for x, y, z in lists.triples:
        if variant is TripleDeltaVariant.STRICT:
            triple2 += 2 * ((sigma[:, x] == sigma[:, y]) & (sigma[:, y] == sigma[:, z]))
        else:
            triple2 += (sigma[:, x] == sigma[:, y]).astype(np.int64) + (sigma[:, y] == sigma[:, z])
    field = (sigma == 1).sum(axis=1)
    if not boundary.is_free:
        for x in tree.leaves:
            aligned = sigma[:, x] == boundary.spin
            nn += 2 * aligned
            triple2 += 2 * aligned

    log_w = params.beta * (params.J * nn + params.J1 * second
                           + params.J2 * (triple2 / 2) + params.h * field)
    top = log_w.max()
    return float(top + math.log(np.exp(log_w - top).sum()))


def _check_depth(n: int, allow_long: bool) -> None:
    cap = MAX_ENUM_DEPTH if allow_long else DEFAULT_ENUM_DEPTH
    if not 0 <= n <= cap:
        hint = "" if allow_long or n > MAX_ENUM_DEPTH else " (pass allow_long=True for n=3)"
        raise ResourceLimitError(f"enumeration depth {n} outside 0..{cap}{hint}")


def exact_partition_vector(n: int, params: ModelParams, boundary: BoundarySpec = FREE,
                           variant: TripleDeltaVariant = TripleDeltaVariant.AVERAGED,
                           *, allow_long: bool = True, jobs: int = 1) -> PartitionVector:
    _check_depth(n, allow_long)
    child_spins = [(a, b) for a, b in itertools.product((1, 2, 3), repeat=2)] if n else [(0, 0)]
    tasks = [(n, params, boundary, variant, r, a, b)
             for r in (1, 2, 3) for a, b in child_spins]
    if jobs > 1 and n >= 3:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            partial = list(pool.map(_shard_logsum_star, tasks))
    else:
        partial = [_shard_logsum(*t) for t in tasks]
    per_root = np.array(partial).reshape(3, len(child_spins))
    # Merge in fixed shard order so the result does not depend on `jobs`.
    return PartitionVector.from_array([logsumexp(row) for row in per_root])


def _shard_logsum_star(args):
    return _shard_logsum(*args)


def root_marginal(n: int, params: ModelParams, boundary: BoundarySpec = FREE,
                  variant: TripleDeltaVariant = TripleDeltaVariant.AVERAGED,
                  *, allow_long: bool = True) -> np.ndarray:
    return exact_partition_vector(n, params, boundary, variant, allow_long=allow_long).marginal()
