"""Physical couplings, their exponentiated forms and the Hamiltonian."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .tree import (
    CayleyTree,
    TripleDeltaVariant,
    delta2,
    delta3_twice,
    interaction_lists,
)


class ParameterRangeError(ValueError):
    """Parameters outside the representable or admissible range."""


@dataclass(frozen=True)
class ModelParams:
    J: float
    J1: float
    J2: float
    h: float
    beta: float = 1.0

    def __post_init__(self):
        for name in ("J", "J1", "J2", "h", "beta"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterRangeError(f"{name} must be finite")
        if self.beta <= 0:
            raise ParameterRangeError("beta must be positive")

    @property
    def degenerate(self) -> bool:
        """True when some coupling is zero (allowed, though the analysis assumes nonzero couplings)."""
        return self.J * self.J1 * self.J2 * self.h == 0


@dataclass(frozen=True)
class ThetaParams:
    theta: float
    theta1: float
    theta2: float
    theta3: float

    def __post_init__(self):
        for name in ("theta", "theta1", "theta2", "theta3"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ParameterRangeError(f"{name} must be positive and finite, got {val}")

    @property
    def theta_tilde(self) -> float:
        return self.theta * math.sqrt(self.theta2)

    def replace(self, **kw) -> "ThetaParams":
        vals = dict(theta=self.theta, theta1=self.theta1,
                    theta2=self.theta2, theta3=self.theta3)
        vals.update(kw)
        return ThetaParams(**vals)

    @classmethod
    def from_tilde(cls, theta_tilde: float, theta1: float, theta3: float,
                   theta2: float = 1.0) -> "ThetaParams":
        """Parameters with a prescribed theta_tilde (theta solved from theta2)."""
        return cls(theta_tilde / math.sqrt(theta2), theta1, theta2, theta3)


def thetas_from(params: ModelParams) -> ThetaParams:
    b = params.beta
    try:
        return ThetaParams(
            math.exp(b * params.J),
            math.exp(b * params.J1),
            math.exp(b * params.J2),
            math.exp(b * params.h),
        )
    except OverflowError as exc:
        raise ParameterRangeError(f"exponentiated coupling overflows: {params}") from exc


def params_from_thetas(thetas: ThetaParams, beta: float = 1.0) -> ModelParams:
    return ModelParams(
        math.log(thetas.theta) / beta,
        math.log(thetas.theta1) / beta,
        math.log(thetas.theta2) / beta,
        math.log(thetas.theta3) / beta,
        beta,
    )


@dataclass(frozen=True)
class BoundarySpec:
    """Free boundary (``spin=None``) or the uniform configuration ``spin`` outside V_n."""

    spin: int | None = None

    def __post_init__(self):
        if self.spin is not None and self.spin not in (1, 2, 3):
            raise ValueError(f"boundary spin {self.spin!r} not in (1, 2, 3)")

    @property
    def is_free(self) -> bool:
        return self.spin is None

    @classmethod
    def parse(cls, text: str) -> "BoundarySpec":
        return cls(None) if text == "free" else cls(int(text))

    def __str__(self) -> str:
        return "free" if self.spin is None else str(self.spin)


FREE = BoundarySpec()


def _as_spins(config: Mapping[int, int] | Sequence[int], tree: CayleyTree) -> list[int]:
    if isinstance(config, Mapping):
        if set(config) != set(tree.vertices):
            raise ValueError("configuration domain does not match the tree")
        spins = [config[x] for x in tree.vertices]
    else:
        spins = list(config)
        if len(spins) != tree.n_vertices:
            raise ValueError(
                f"configuration has {len(spins)} spins, tree has {tree.n_vertices} vertices")
    for s in spins:
        if s not in (1, 2, 3):
            raise ValueError(f"spin {s!r} not in (1, 2, 3)")
    return spins


def energy_terms(config, tree: CayleyTree, boundary: BoundarySpec = FREE,
                 variant: TripleDeltaVariant = TripleDeltaVariant.AVERAGED
                 ) -> tuple[int, int, float, int]:
    """Interaction counts (nn, second, triple, field) such that
    H = -(J*nn + J1*second + J2*triple + h*field)."""
    sigma = _as_spins(config, tree)
    lists = interaction_lists(tree)
    nn = sum(delta2(sigma[x], sigma[y]) for x, y in lists.nn_edges)
    second = sum(delta2(sigma[x], sigma[y]) for x, y in lists.second_pairs)
    triple2 = sum(delta3_twice(sigma[x], sigma[y], sigma[z], variant)
                  for x, y, z in lists.triples)
    field = sum(delta2(1, s) for s in sigma)
    if not boundary.is_free:
        # Each leaf has two outside children fixed to the boundary spin; the
        # sibling pair outside the volume carries no term.
        i = boundary.spin
        for x in tree.leaves:
            nn += 2 * delta2(sigma[x], i)
            triple2 += delta3_twice(i, sigma[x], i, variant)
    return nn, second, triple2 / 2, field


def hamiltonian(config, tree: CayleyTree, params: ModelParams,
                boundary: BoundarySpec = FREE,
                variant: TripleDeltaVariant = TripleDeltaVariant.AVERAGED) -> float:
    nn, second, triple, field = energy_terms(config, tree, boundary, variant)
    return -(params.J * nn + params.J1 * second + params.J2 * triple + params.h * field)


def boltzmann_weight(config, tree: CayleyTree, params: ModelParams,
                     boundary: BoundarySpec = FREE,
                     variant: TripleDeltaVariant = TripleDeltaVariant.AVERAGED) -> float:
    """Log Boltzmann weight, -beta * H."""
    return -params.beta * hamiltonian(config, tree, params, boundary, variant)
