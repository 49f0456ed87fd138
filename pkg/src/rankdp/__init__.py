"""Differentially private ranking synthesis, audits, and pairwise learning."""

from ._kernels import BACKEND as kernel_backend
from .core import (
    ENUMERATION_CAP,
    NeighborWitness,
    Ranking,
    concordant_pairs,
    discordant_pairs,
    enumerate_neighbors,
    enumerate_permutations,
    invert,
    is_neighbor,
    neighbor_witnesses,
    normalized_concordance,
    validate_ranking,
)
from .mechanisms import (
    LaplaceMechanism,
    MallowsMechanism,
    NoisyScores,
    StageDistribution,
    chain_probability,
    expected_concordance_laplace,
    expected_concordance_mallows,
    expected_stage_position,
    induced_ranking,
    laplace_perturb,
    mallows_pmf,
    stage_distribution,
    synthesize,
    synthesize_many,
)

__version__ = "0.1.0"
