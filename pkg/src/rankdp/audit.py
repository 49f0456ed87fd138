"""Privacy verification for the ranking mechanisms.

Two routes: an exact worst-case log-ratio over all neighbors (the
synthesizer's normalizer cancels, so the ratio reduces to the pair weight
times the count of disagreeing pairs), and a Monte-Carlo estimate that
samples both arms and compares empirical output frequencies.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .core import (
    ENUMERATION_CAP,
    Ranking,
    discordant_pairs,
    enumerate_neighbors,
    invert,
    permutation_matrix,
)
from .errors import CapExceeded, SizeMismatch, ZeroSamples
from .mechanisms import LaplaceMechanism, MallowsMechanism, _sample_codes, _stage_cdfs
from .seeding import derive_seed, spawn_generator

# Empirical audits must be able to saturate the output space.
EMPIRICAL_CAP = 6

_COUNT_CHUNK = 1 << 20


@dataclass
class AuditReport:
    """Measured privacy guarantee with the witnessing neighbor/output."""

    configured_epsilon: float
    measured_epsilon: float
    mode: str
    m: int
    worst_neighbor: Ranking
    worst_output: Ranking
    samples_per_arm: Optional[int] = None
    skipped_cells: Optional[int] = None

    def to_dict(self) -> dict:
        doc = {
            "configured_epsilon": self.configured_epsilon,
            "measured_epsilon": self.measured_epsilon,
            "mode": self.mode,
            "m": self.m,
            "worst_neighbor": list(self.worst_neighbor.ranks),
            "worst_output": list(self.worst_output.ranks),
        }
        if self.mode == "empirical":
            doc["samples_per_arm"] = self.samples_per_arm
            doc["skipped_cells"] = self.skipped_cells
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def per_neighbor_ratios(
    mech: MallowsMechanism, base: Ranking
) -> list[tuple[Ranking, float]]:
    """Exact sup-over-outputs log-ratio for each neighbor of ``base``.

    The supremum is attained at the base ranking itself, where every
    disagreeing pair counts once, so each ratio is the pair weight times
    the disagreeing-pair count (an integer multiple of epsilon/(m-1)).
    """
    if base.m != mech.m:
        raise SizeMismatch(f"mechanism m={mech.m}, base m={base.m}")
    beta = mech.pair_weight
    return [
        (nw.neighbor, beta * discordant_pairs(base, nw.neighbor))
        for nw in enumerate_neighbors(base)
    ]


def exact_epsilon(
    mech: MallowsMechanism, base: Ranking, cap: int = ENUMERATION_CAP
) -> AuditReport:
    """Exact worst-case privacy loss of the synthesizer at ``base``.

    Equals the configured epsilon for every base: the neighbor moving one
    item across the whole ranking flips m-1 pairs, each weighted
    epsilon/(m-1), and the ratio is maximized at output == base.
    """
    if mech.m > cap:
        raise CapExceeded(f"m={mech.m} exceeds audit cap {cap}")
    ratios = per_neighbor_ratios(mech, base)
    worst_neighbor, measured = max(ratios, key=lambda item: item[1])
    return AuditReport(
        configured_epsilon=mech.epsilon,
        measured_epsilon=measured,
        mode="exact",
        m=mech.m,
        worst_neighbor=worst_neighbor,
        worst_output=base,
    )


def _output_index_by_code(order: tuple[int, ...], m: int) -> np.ndarray:
    """Map every insertion-code combination to its output permutation index
    (lexicographic) for the arm whose processing order is ``order``."""
    radices = list(range(2, m + 1))
    grids = np.meshgrid(*[np.arange(r) for r in radices], indexing="ij")
    codes = np.stack([g.ravel() for g in grids], axis=1)
    ranks = _kernels.decode_insertion_codes(np.asarray(order, dtype=np.int64), codes)
    perm_index = {tuple(row): i for i, row in enumerate(permutation_matrix(m).tolist())}
    return np.array([perm_index[tuple(row)] for row in ranks.tolist()], dtype=np.int64)


def _arm_output_counts(
    epsilon: float, m: int, arm_ranks: tuple[int, ...], n_samples: int, arm_seed: int
) -> np.ndarray:
    """Sample ``n_samples`` synthetic rankings from one arm and count
    outputs over all m! permutations (via the code bijection)."""
    mech = MallowsMechanism(epsilon, m)
    arm = Ranking(arm_ranks)
    cdfs = _stage_cdfs(mech)
    rng = spawn_generator(arm_seed)
    n_codes = math.factorial(m)
    code_counts = np.zeros(n_codes, dtype=np.int64)
    remaining = n_samples
    while remaining > 0:
        block = min(remaining, _COUNT_CHUNK)
        codes = _sample_codes(cdfs, block, rng)
        flat = codes[:, 0]
        for s in range(1, m - 1):
            flat = flat * (s + 2) + codes[:, s]
        code_counts += np.bincount(flat, minlength=n_codes)
        remaining -= block
    to_output = _output_index_by_code(invert(arm), m)
    counts = np.zeros(n_codes, dtype=np.int64)
    np.add.at(counts, to_output, code_counts)
    return counts


def empirical_epsilon(
    mech: MallowsMechanism,
    base: Ranking,
    n_samples: int,
    seed: int,
    workers: int = 1,
    cap: int = EMPIRICAL_CAP,
) -> AuditReport:
    """Monte-Carlo privacy estimate: sample ``n_samples`` outputs from the
    base and from every neighbor, then take the largest absolute
    log-count-ratio over outputs observed in both arms.

    Cells with a zero count in either arm are skipped, not smoothed
    (smoothing would bias the estimate down); the skip count is reported so
    callers can raise ``n_samples``.  Arms use independent derived
    generators and may be sampled in parallel.
    """
    if mech.m > cap:
        raise CapExceeded(f"m={mech.m} exceeds empirical audit cap {cap}")
    if base.m != mech.m:
        raise SizeMismatch(f"mechanism m={mech.m}, base m={base.m}")
    if n_samples <= 0:
        raise ZeroSamples(f"need n_samples >= 1, got {n_samples}")

    neighbors = [nw.neighbor for nw in enumerate_neighbors(base)]
    arms = [base] + neighbors
    tasks = [
        (mech.epsilon, mech.m, arm.ranks, n_samples, derive_seed(seed, "audit-arm", i))
        for i, arm in enumerate(arms)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_arm_output_counts_star, tasks))
    else:
        counts = [_arm_output_counts(*task) for task in tasks]

    outputs = permutation_matrix(mech.m)
    base_counts = counts[0]
    best = -1.0
    best_neighbor = neighbors[0]
    best_output = base
    skipped = 0
    for j, nb_counts in enumerate(counts[1:]):
        both = (base_counts > 0) & (nb_counts > 0)
        skipped += int(np.count_nonzero(~both))
        ratios = np.abs(np.log(base_counts[both]) - np.log(nb_counts[both]))
        if ratios.size and ratios.max() > best:
            best = float(ratios.max())
            best_neighbor = neighbors[j]
            best_output = Ranking.from_array(outputs[np.flatnonzero(both)[np.argmax(ratios)]])
    if best < 0.0:
        raise ZeroSamples("no output was observed in both arms of any neighbor")
    return AuditReport(
        configured_epsilon=mech.epsilon,
        measured_epsilon=best,
        mode="empirical",
        m=mech.m,
        worst_neighbor=best_neighbor,
        worst_output=best_output,
        samples_per_arm=n_samples,
        skipped_cells=skipped,
    )


def _arm_output_counts_star(task):
    return _arm_output_counts(*task)


def laplace_analytic_epsilon(
    mech: Optional[LaplaceMechanism] = None, *, scale: float = None, m: int = None
) -> float:
    """Tight density-ratio bound of the rank-noise mechanism: 2(m-1)/scale.

    Pass either a mechanism or an explicit (scale, m); the latter admits
    scale = inf, for which the bound is 0.
    """
    if mech is not None:
        scale, m = mech.scale, mech.m
    if scale is None or m is None:
        raise ValueError("need a mechanism or both scale and m")
    if scale <= 0:
        raise ValueError(f"scale must be > 0, got {scale}")
    return 2.0 * (m - 1) / scale
