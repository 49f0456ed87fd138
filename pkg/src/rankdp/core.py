"""Permutation and ranking primitives.

A ranking over m items is a rank vector ``ranks`` where ``ranks[i]`` is the
rank (1..m) of item ``i``; item indices are 0-based, rank values 1-based.
All objects here are immutable values and all functions are pure.

Two concordance conventions are exported because downstream formulas use
both: ``concordant_pairs`` is the raw unordered count C in 0..m(m-1)/2,
``normalized_concordance`` is the ordered-pair fraction 2C/(m(m-1)).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import CapExceeded, NotAPermutation, SizeMismatch, TooShort

# Enumerations over all m! permutations refuse to run past this point.
ENUMERATION_CAP = 8


@dataclass(frozen=True)
class Ranking:
    """Immutable rank vector; a permutation of 1..m."""

    ranks: tuple[int, ...]

    def __post_init__(self):
        _check_permutation(self.ranks)

    @property
    def m(self) -> int:
        return len(self.ranks)

    def to_array(self) -> np.ndarray:
        return np.asarray(self.ranks, dtype=np.int64)

    @classmethod
    def from_array(cls, arr) -> "Ranking":
        return cls(tuple(int(v) for v in arr))

    def __repr__(self) -> str:
        return f"Ranking({list(self.ranks)})"


@dataclass(frozen=True)
class NeighborWitness:
    """A neighboring ranking together with every item whose removal makes
    the two rankings agree on all remaining pairs."""

    neighbor: Ranking
    witness_items: frozenset[int]


def _check_permutation(ranks: Sequence[int]) -> None:
    m = len(ranks)
    if m < 2:
        raise TooShort(f"need at least 2 items, got {m}")
    seen = [False] * m
    for v in ranks:
        if not isinstance(v, (int, np.integer)):
            raise NotAPermutation(f"non-integer rank {v!r}")
        if v < 1 or v > m:
            raise NotAPermutation(f"rank {v} outside 1..{m}")
        if seen[v - 1]:
            raise NotAPermutation(f"duplicate rank {v}")
        seen[v - 1] = True


def validate_ranking(raw: Iterable[int]) -> Ranking:
    """Check that ``raw`` is a permutation of 1..len(raw) and wrap it.

    Raises NotAPermutation or TooShort otherwise.
    """
    return Ranking(tuple(int(v) for v in raw))


def invert(r: Ranking) -> tuple[int, ...]:
    """Items ordered by rank: result[k-1] is the item holding rank k."""
    items = [0] * r.m
    for item, rank in enumerate(r.ranks):
        items[rank - 1] = item
    return tuple(items)


def _require_same_m(a: Ranking, b: Ranking) -> None:
    if a.m != b.m:
        raise SizeMismatch(f"rankings of size {a.m} and {b.m}")


def concordant_pairs(a: Ranking, b: Ranking) -> int:
    """Number of unordered item pairs ordered the same way by both rankings."""
    _require_same_m(a, b)
    ra, rb = a.to_array(), b.to_array()
    ii, jj = np.triu_indices(a.m, k=1)
    return int(np.count_nonzero((ra[ii] - ra[jj]) * (rb[ii] - rb[jj]) > 0))


def discordant_pairs(a: Ranking, b: Ranking) -> int:
    """Unordered pairs on which the two rankings disagree."""
    _require_same_m(a, b)
    return a.m * (a.m - 1) // 2 - concordant_pairs(a, b)


def normalized_concordance(a: Ranking, b: Ranking) -> float:
    """Ordered-pair concordance fraction in [0, 1]: 2C / (m(m-1))."""
    _require_same_m(a, b)
    return 2.0 * concordant_pairs(a, b) / (a.m * (a.m - 1))


def enumerate_permutations(m: int, cap: int = ENUMERATION_CAP) -> Iterator[Ranking]:
    """All m! rankings in lexicographic order of their rank vectors."""
    if m > cap:
        raise CapExceeded(f"m={m} exceeds enumeration cap {cap}")
    if m < 2:
        raise TooShort(f"need at least 2 items, got {m}")
    for perm in itertools.permutations(range(1, m + 1)):
        yield Ranking(perm)


def permutation_matrix(m: int, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """All m! rank vectors as an (m!, m) int64 array, lexicographic order."""
    if m > cap:
        raise CapExceeded(f"m={m} exceeds enumeration cap {cap}")
    if m < 2:
        raise TooShort(f"need at least 2 items, got {m}")
    return np.array(list(itertools.permutations(range(1, m + 1))), dtype=np.int64)


def neighbor_witnesses(a: Ranking, b: Ranking) -> frozenset[int]:
    """Every item k such that a and b agree on all pairs not involving k.

    Empty when a == b or when no single removal reconciles the two rankings.
    """
    _require_same_m(a, b)
    if a.ranks == b.ranks:
        return frozenset()
    ra, rb = a.to_array(), b.to_array()
    ii, jj = np.triu_indices(a.m, k=1)
    discord = (ra[ii] - ra[jj]) * (rb[ii] - rb[jj]) < 0
    witnesses = []
    for k in range(a.m):
        involves_k = (ii == k) | (jj == k)
        if not np.any(discord & ~involves_k):
            witnesses.append(k)
    return frozenset(witnesses)


def is_neighbor(a: Ranking, b: Ranking) -> bool:
    """Symmetric neighbor relation: a != b and some item witnesses them.

    Identical rankings are not neighbors; adjacent transpositions are
    (with two witnesses).
    """
    return len(neighbor_witnesses(a, b)) > 0


def enumerate_neighbors(r: Ranking) -> list[NeighborWitness]:
    """All distinct neighbors of r, obtained by moving one item to a new
    rank; duplicates are merged and their witness sets accumulated."""
    found: dict[tuple[int, ...], set[int]] = {}
    ranks = list(r.ranks)
    m = r.m
    for k in range(m):
        old = ranks[k]
        for new in range(1, m + 1):
            if new == old:
                continue
            moved = []
            for item, rank in enumerate(ranks):
                if item == k:
                    moved.append(new)
                elif old < rank <= new:
                    moved.append(rank - 1)
                elif new <= rank < old:
                    moved.append(rank + 1)
                else:
                    moved.append(rank)
            found.setdefault(tuple(moved), set()).add(k)
    return [
        NeighborWitness(Ranking(ranks_), frozenset(wit))
        for ranks_, wit in sorted(found.items())
    ]
