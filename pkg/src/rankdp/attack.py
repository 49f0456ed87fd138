"""Recovery of the central ranking from repeated synthetic rankings.

The attacker sees N independent synthetic rankings and knows the mechanism
and its budget.  The maximum-likelihood estimate reduces to maximizing the
total concordance with the sample (the log-partition term is constant over
candidate rankings), i.e. a Kemeny-type aggregation solved here by brute
force over all m! permutations.  Borda aggregation is the fast surrogate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import ENUMERATION_CAP, Ranking, permutation_matrix
from .errors import CapExceeded, EmptySample
from .mechanisms import MallowsMechanism, synthesize_many
from .seeding import derive_seed, spawn_generator

_SCHEDULE_KINDS = ("fixed", "sqrt", "logsqrt")


@dataclass(frozen=True)
class EpsilonSchedule:
    """Privacy budget as a function of the sample size N.

    fixed: epsilon = c; sqrt: epsilon = c (m-1) / sqrt(N);
    logsqrt: epsilon = c (m-1) ln(N) / sqrt(N).
    """

    kind: str
    c: float

    def __post_init__(self):
        if self.kind not in _SCHEDULE_KINDS:
            raise ValueError(f"schedule kind must be one of {_SCHEDULE_KINDS}, got {self.kind!r}")
        if not self.c > 0:
            raise ValueError(f"schedule constant must be > 0, got {self.c}")

    def epsilon_for(self, m: int, n: int) -> float:
        if self.kind == "fixed":
            return self.c
        if self.kind == "sqrt":
            return self.c * (m - 1) / math.sqrt(n)
        return self.c * (m - 1) * math.log(n) / math.sqrt(n)


@dataclass(frozen=True)
class AttackSample:
    """A batch of synthetic rankings drawn from one central ranking."""

    rankings: tuple[Ranking, ...]
    epsilon: float
    m: int

    def __post_init__(self):
        if len(self.rankings) == 0:
            raise EmptySample("need at least one ranking")
        if any(r.m != self.m for r in self.rankings):
            raise ValueError("all rankings must share the sample's item count")

    def to_matrix(self) -> np.ndarray:
        return np.array([r.ranks for r in self.rankings], dtype=np.int64)


@dataclass(frozen=True)
class AttackCell:
    """One row of an attack experiment: error rate at a given (m, N)."""

    m: int
    n: int
    epsilon: float
    schedule: str
    replications: int
    errors: int
    error_rate: float
    stderr: float
    seed: int


def _pair_indices(m: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(m, k=1)


def _candidate_order_signs(m: int, cap: int) -> np.ndarray:
    """(m!, pairs) float matrix; entry 1 when the candidate ranks item i
    above item j for pair (i, j), else 0.  Lexicographic candidate order."""
    perms = permutation_matrix(m, cap)
    ii, jj = _pair_indices(m)
    return (perms[:, ii] > perms[:, jj]).astype(np.float64)


def _mle_indices_from_wins(wins: np.ndarray, m: int, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """Brute-force concordance maximizer for a batch of win matrices.

    ``wins[..., i, j]`` counts samples ranking item i above item j.  Returns
    the index of the lexicographically-smallest argmax permutation per
    batch entry (np.argmax picks the first maximum; candidates are
    enumerated lexicographically).
    """
    if m > cap:
        raise CapExceeded(f"m={m} exceeds enumeration cap {cap}")
    wins = np.asarray(wins, dtype=np.float64)
    squeeze = wins.ndim == 2
    if squeeze:
        wins = wins[None]
    ii, jj = _pair_indices(m)
    signs = _candidate_order_signs(m, cap)
    w_ij = wins[:, ii, jj]
    w_ji = wins[:, jj, ii]
    scores = w_ij @ signs.T + w_ji @ (1.0 - signs.T)
    best = np.argmax(scores, axis=1)
    return best[0] if squeeze else best


def _as_matrix(sample) -> tuple[np.ndarray, int]:
    if isinstance(sample, AttackSample):
        return sample.to_matrix(), sample.m
    matrix = np.asarray(sample, dtype=np.int64)
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise EmptySample("need a nonempty (N, m) rank matrix")
    return matrix, matrix.shape[1]


def mle_central_ranking(sample, cap: int = ENUMERATION_CAP) -> Ranking:
    """Maximizer of total concordance with the sample, ties broken toward
    the lexicographically-smallest rank vector.  Independent of epsilon."""
    matrix, m = _as_matrix(sample)
    wins = _kernels.pair_greater_counts(matrix)
    index = _mle_indices_from_wins(wins, m, cap)
    return Ranking.from_array(permutation_matrix(m, cap)[index])


def borda_aggregate(sample) -> Ranking:
    """Rank items by ascending mean observed rank, index tie-break."""
    matrix, m = _as_matrix(sample)
    means = matrix.mean(axis=0)
    order = np.argsort(means, kind="stable")
    ranks = np.empty(m, dtype=np.int64)
    ranks[order] = np.arange(1, m + 1)
    return Ranking.from_array(ranks)


def attack_cell(
    m: int,
    schedule: EpsilonSchedule,
    n: int,
    replications: int,
    base_seed: int,
    cap: int = ENUMERATION_CAP,
) -> AttackCell:
    """Error rate of MLE recovery at one (m, N) grid point.

    Each replication draws N synthetic rankings from the identity central
    ranking with its own generator derived from
    (base_seed, m, schedule, N, replication_index) and recovers by brute
    force; errors are exact mismatches.
    """
    if m > cap:
        raise CapExceeded(f"m={m} exceeds enumeration cap {cap}")
    if replications < 1:
        raise ValueError(f"need replications >= 1, got {replications}")
    epsilon = schedule.epsilon_for(m, n)
    mech = MallowsMechanism(epsilon, m)
    identity = Ranking(tuple(range(1, m + 1)))
    wins = np.empty((replications, m, m), dtype=np.int64)
    for rep in range(replications):
        rng = spawn_generator(base_seed, "attack", m, schedule.kind, schedule.c, n, rep)
        draws = synthesize_many(mech, identity, n, rng)
        wins[rep] = _kernels.pair_greater_counts(draws)
    indices = _mle_indices_from_wins(wins, m, cap)
    errors = int(np.count_nonzero(indices != 0))
    rate = errors / replications
    return AttackCell(
        m=m,
        n=n,
        epsilon=epsilon,
        schedule=schedule.kind,
        replications=replications,
        errors=errors,
        error_rate=rate,
        stderr=math.sqrt(rate * (1.0 - rate) / replications),
        seed=derive_seed(base_seed, "attack", m, schedule.kind, schedule.c, n),
    )


def attack_error_probability(
    m: int,
    schedule: EpsilonSchedule,
    n_grid,
    replications: int,
    base_seed: int,
    cap: int = ENUMERATION_CAP,
) -> list[AttackCell]:
    """Error-rate table over an N grid (duplicates dropped, ascending)."""
    grid = sorted(set(int(n) for n in n_grid))
    if not grid or grid[0] < 1:
        raise ValueError("n_grid must contain positive sample sizes")
    return [attack_cell(m, schedule, n, replications, base_seed, cap) for n in grid]
