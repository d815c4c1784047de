"""Three-state Potts model with competing interactions on the binary Cayley tree."""

from .enumeration import PartitionVector, exact_partition_vector, root_marginal
from .fixed_points import FixedPoint, all_fixed_points, solve_symmetric, stability_of
from .model import BoundarySpec, ModelParams, ThetaParams, hamiltonian, thetas_from
from .phase import PhaseClass, classify, critical_beta_bracket, find_regime, region_bounds, scan
from .recursion import RatioPoint, boundary_seeded_limit, iterate, ratio_step, step_partition
from .tree import TripleDeltaVariant, build_tree, interaction_lists

__all__ = [
    "BoundarySpec", "FixedPoint", "ModelParams", "PartitionVector", "PhaseClass",
    "RatioPoint", "ThetaParams", "TripleDeltaVariant", "all_fixed_points",
    "boundary_seeded_limit", "build_tree", "classify", "critical_beta_bracket",
    "exact_partition_vector", "find_regime", "hamiltonian", "interaction_lists",
    "iterate", "ratio_step", "region_bounds", "root_marginal", "scan",
    "solve_symmetric", "stability_of", "step_partition", "thetas_from",
]
