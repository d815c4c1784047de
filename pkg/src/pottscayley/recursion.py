"""Partition-function recursion on the tree and the induced ratio map.

One step of the recursion attaches a new root above two independent copies of
the depth-(n-1) tree. In ratio variables ``u = Z2/Z1`` and ``v = Z3/Z1`` the
step becomes a rational map of the positive quadrant.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .enumeration import PartitionVector
from .model import FREE, BoundarySpec, ThetaParams
from .tree import TripleDeltaVariant, delta2, delta3_twice

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000
CYCLE_MEMORY = 8


@dataclass(frozen=True)
class RatioPoint:
    u: float
    v: float

    def __post_init__(self):
        if not (self.u > 0 and self.v > 0 and math.isfinite(self.u) and math.isfinite(self.v)):
            raise ValueError(f"ratio point must be positive and finite, got ({self.u}, {self.v})")

    def swapped(self) -> "RatioPoint":
        return RatioPoint(self.v, self.u)

    def as_tuple(self) -> tuple[float, float]:
        return self.u, self.v


@dataclass(frozen=True)
class IterationResult:
    point: RatioPoint
    iterations: int
    residual: float
    converged: bool
    cycle_period: int | None = None


def log_weight_table(thetas: ThetaParams,
                     variant: TripleDeltaVariant = TripleDeltaVariant.AVERAGED) -> np.ndarray:
    """``W[i, j, m]``: log weight of root spin i with children spins j, m.

    Built directly from the Kronecker symbols, so it serves either triple
    variant.
    """
    lt, lt1, lt2, lt3 = (math.log(x) for x in
                         (thetas.theta, thetas.theta1, thetas.theta2, thetas.theta3))
    W = np.empty((3, 3, 3))
    for i, j, m in itertools.product((1, 2, 3), repeat=3):
        W[i - 1, j - 1, m - 1] = (lt * (delta2(i, j) + delta2(i, m))
                                  + lt1 * delta2(j, m)
                                  + lt2 * delta3_twice(j, i, m, variant) / 2
                                  + lt3 * delta2(1, i))
    return W


def _step_table(z: np.ndarray, W: np.ndarray) -> np.ndarray:
    pair = z[:, None] + z[None, :]
    return logsumexp(W + pair[None, :, :], axis=(1, 2))


def _step_averaged(z: np.ndarray, thetas: ThetaParams) -> np.ndarray:
    top = np.max(z)
    Z1, Z2, Z3 = np.exp(z - top)
    th, t1, t3 = thetas.theta, thetas.theta1, thetas.theta3
    tt = thetas.theta_tilde
    tt2 = th * th * t1 * thetas.theta2
    new1 = t3 * (tt2 * Z1**2 + 2 * tt * (Z1 * Z2 + Z1 * Z3) + t1 * (Z2**2 + Z3**2) + 2 * Z2 * Z3)
    new2 = t1 * Z1**2 + 2 * tt * Z2 * (Z1 + Z3) + 2 * Z1 * Z3 + tt2 * Z2**2 + t1 * Z3**2
    new3 = t1 * Z1**2 + 2 * tt * Z3 * (Z1 + Z2) + 2 * Z1 * Z2 + tt2 * Z3**2 + t1 * Z2**2
    with np.errstate(divide="ignore"):
        return np.log([new1, new2, new3]) + 2 * top


def step_partition(pv: PartitionVector, thetas: ThetaParams,
                   variant: TripleDeltaVariant = TripleDeltaVariant.AVERAGED) -> PartitionVector:
    z = pv.as_array()
    if variant is TripleDeltaVariant.AVERAGED:
        return PartitionVector.from_array(_step_averaged(z, thetas))
    return PartitionVector.from_array(_step_table(z, log_weight_table(thetas, variant)))


def base_partition(boundary: BoundarySpec, thetas: ThetaParams,
                   variant: TripleDeltaVariant = TripleDeltaVariant.AVERAGED) -> PartitionVector:
    """Depth-0 partition vector: a single vertex (the future leaf).

    For a uniform boundary the leaf also interacts with its two outside
    children. That is one recursion step applied to the indicator of the
    boundary spin, divided by theta1 to remove the sibling term between the
    two outside children (which the Hamiltonian does not count).
    """
    if boundary.is_free:
        return PartitionVector(math.log(thetas.theta3), 0.0, 0.0)
    indicator = np.full(3, -np.inf)
    indicator[boundary.spin - 1] = 0.0
    stepped = step_partition(PartitionVector.from_array(indicator), thetas, variant)
    return PartitionVector.from_array(stepped.as_array() - math.log(thetas.theta1))


def partition_after(n: int, thetas: ThetaParams, boundary: BoundarySpec = FREE,
                    variant: TripleDeltaVariant = TripleDeltaVariant.AVERAGED) -> PartitionVector:
    """Z^(n) by n recursion steps from the depth-0 base."""
    pv = base_partition(boundary, thetas, variant)
    for _ in range(n):
        pv = step_partition(pv, thetas, variant)
    return pv


def ratio_map_terms(u: float, v: float, thetas: ThetaParams, *,
                    misprinted_v: bool = False) -> tuple[float, float, float]:
    """Numerators of u', v' and the common denominator (before dividing by theta3)."""
    tt = thetas.theta_tilde
    t1 = thetas.theta1
    a = tt * tt * t1
    num_u = t1 + 2 * tt * u * (1 + v) + 2 * v + a * u * u + t1 * v * v
    if misprinted_v:
        # As printed: breaks the u <-> v symmetry. Kept only to expose the misprint.
        num_v = t1 + 2 * u + 2 * tt * v * (1 + u) + thetas.theta * u * u + a * u * u
    else:
        # num_u with u and v exchanged, term for term, so u = v stays exact.
        num_v = t1 + 2 * tt * v * (1 + u) + 2 * u + a * v * v + t1 * u * u
    den = a + 2 * tt * (u + v) + t1 * (u * u + v * v) + 2 * u * v
    return num_u, num_v, den


def ratio_step(p: RatioPoint, thetas: ThetaParams, *,
               misprinted_v: bool = False) -> RatioPoint:
    num_u, num_v, den = ratio_map_terms(p.u, p.v, thetas, misprinted_v=misprinted_v)
    scale = thetas.theta3 * den
    return RatioPoint(num_u / scale, num_v / scale)


def _step_size(p: RatioPoint, q: RatioPoint) -> float:
    """Sup-norm displacement, relative once the point exceeds 1 in size."""
    return max(abs(q.u - p.u), abs(q.v - p.v)) / max(1.0, q.u, q.v)


def iterate(p0: RatioPoint, thetas: ThetaParams, tol: float = DEFAULT_TOL,
            max_iter: int = DEFAULT_MAX_ITER) -> IterationResult:
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    p = p0
    history: deque[tuple[float, float]] = deque(maxlen=CYCLE_MEMORY)
    residual = math.inf
    for k in range(1, max_iter + 1):
        q = ratio_step(p, thetas)
        residual = _step_size(p, q)
        if residual < tol:
            return IterationResult(q, k, residual, True)
        for lag, (hu, hv) in enumerate(reversed(history), start=2):
            if _step_size(RatioPoint(hu, hv), q) < tol:
                return IterationResult(q, k, residual, False, cycle_period=lag)
        history.append(p.as_tuple())
        p = q
    return IterationResult(p, max_iter, residual, False)


def boundary_seed(i: int, thetas: ThetaParams) -> RatioPoint:
    return RatioPoint(*base_partition(BoundarySpec(i), thetas).ratios())


def boundary_seeded_limit(i: int, thetas: ThetaParams, tol: float = DEFAULT_TOL,
                          max_iter: int = DEFAULT_MAX_ITER) -> IterationResult:
    return iterate(boundary_seed(i, thetas), thetas, tol, max_iter)
