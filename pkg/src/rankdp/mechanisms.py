"""Randomized ranking mechanisms and their exact output distributions.

Two mechanisms share the same privacy budget semantics: a multistage
synthesizer that inserts items one at a time with truncated-geometric stage
weights (equivalent to an exponential-family model over permutations
weighted by pairwise concordance with the input), and a baseline that adds
i.i.d. Laplace noise to rank values and re-ranks.

Conventions: the per-pair exponent weight is beta = epsilon / (m - 1); the
equivalent dispersion for the normalized-concordance parameterization is
theta = epsilon * m / 2.  ``epsilon = inf`` builds a non-private
pass-through mechanism.  ``epsilon = 0`` (uniform output) is rejected by
the public constructor and available only through the test-only
``MallowsMechanism._unchecked``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import Ranking, concordant_pairs, invert
from .errors import NonFiniteScore, SizeMismatch, StageOutOfRange

# Draws per block when sampling very large batches.
_CHUNK = 1 << 20


@dataclass(frozen=True)
class MallowsMechanism:
    """Multistage ranking synthesizer with privacy budget epsilon."""

    epsilon: float
    m: int

    def __post_init__(self):
        _check_m(self.m)
        eps = float(self.epsilon)
        if math.isnan(eps) or eps <= 0.0:
            raise ValueError(f"epsilon must be > 0 (or inf for pass-through), got {eps}")
        object.__setattr__(self, "epsilon", eps)

    @classmethod
    def _unchecked(cls, epsilon: float, m: int) -> "MallowsMechanism":
        """Test-only constructor that additionally admits epsilon = 0
        (uniform output); never use it to build a production mechanism."""
        _check_m(m)
        eps = float(epsilon)
        if math.isnan(eps) or eps < 0.0:
            raise ValueError(f"epsilon must be >= 0, got {eps}")
        obj = object.__new__(cls)
        object.__setattr__(obj, "epsilon", eps)
        object.__setattr__(obj, "m", int(m))
        return obj

    @property
    def pair_weight(self) -> float:
        """Exponent weight per concordant pair: epsilon / (m - 1)."""
        return self.epsilon / (self.m - 1)

    @property
    def pair_odds(self) -> float:
        """q = exp(epsilon / (m - 1)), the stage weight ratio."""
        return math.exp(self.pair_weight) if math.isfinite(self.pair_weight) else math.inf

    @property
    def dispersion(self) -> float:
        """theta = epsilon * m / 2 for the normalized parameterization."""
        return 0.5 * self.epsilon * self.m


@dataclass(frozen=True)
class LaplaceMechanism:
    """Element-wise Laplace noise on rank values, re-ranked afterwards."""

    epsilon: float
    m: int

    def __post_init__(self):
        _check_m(self.m)
        eps = float(self.epsilon)
        if not math.isfinite(eps) or eps <= 0.0:
            raise ValueError(f"epsilon must be finite and > 0, got {eps}")
        object.__setattr__(self, "epsilon", eps)

    @property
    def scale(self) -> float:
        """Noise scale calibrated to the ranking privacy budget: 2(m-1)/epsilon."""
        return 2.0 * (self.m - 1) / self.epsilon


@dataclass(frozen=True)
class StageDistribution:
    """Distribution of the stage-t insertion position over 0..t-1."""

    t: int
    probabilities: tuple[float, ...]


@dataclass(frozen=True)
class NoisyScores:
    """Rank values plus noise; the raw output of the Laplace mechanism."""

    values: tuple[float, ...]

    def __post_init__(self):
        if any(not math.isfinite(v) for v in self.values):
            raise NonFiniteScore(f"non-finite score in {self.values}")

    def to_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


def _check_m(m: int) -> None:
    if not isinstance(m, (int, np.integer)) or m < 2:
        raise ValueError(f"item count m must be an integer >= 2, got {m!r}")


def _check_stage(mech, t: int) -> None:
    if not 2 <= t <= mech.m:
        raise StageOutOfRange(f"stage t={t} outside 2..{mech.m}")


def _check_input(mech, ranking: Ranking) -> None:
    if ranking.m != mech.m:
        raise SizeMismatch(f"mechanism m={mech.m}, ranking m={ranking.m}")


def _stage_probs(beta: float, t: int) -> np.ndarray:
    """p_k proportional to exp(beta * k) over k = 0..t-1, in log space."""
    if math.isinf(beta):
        p = np.zeros(t)
        p[-1] = 1.0
        return p
    logw = beta * np.arange(t, dtype=np.float64)
    logw -= logw.max()
    w = np.exp(logw)
    return w / w.sum()


def _stage_cdf(beta: float, t: int) -> np.ndarray:
    cdf = np.cumsum(_stage_probs(beta, t))
    cdf[-1] = 1.0
    return cdf


def stage_distribution(mech: MallowsMechanism, t: int) -> StageDistribution:
    """Insertion-position distribution at stage t: p_k = q^k / sum_j q^j.

    Because items are processed in increasing input rank, the concordance
    gain of slot k is k itself, so the weights are a truncated geometric.
    """
    _check_stage(mech, t)
    return StageDistribution(t=t, probabilities=tuple(_stage_probs(mech.pair_weight, t)))


def _stage_cdfs(mech: MallowsMechanism) -> list[np.ndarray]:
    return [_stage_cdf(mech.pair_weight, t) for t in range(2, mech.m + 1)]


def _sample_codes(cdfs: list[np.ndarray], n: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF sampling of one insertion position per stage and draw."""
    stages = len(cdfs)
    u = rng.random((n, stages))
    codes = np.empty((n, stages), dtype=np.int64)
    for s, cdf in enumerate(cdfs):
        codes[:, s] = np.minimum(np.searchsorted(cdf, u[:, s], side="right"), len(cdf) - 1)
    return codes


def synthesize_many(
    mech: MallowsMechanism, ranking: Ranking, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw n synthetic rankings; returns an (n, m) array of rank vectors.

    Deterministic given the generator state; uniforms are consumed in
    row-major draw order so chunking never changes the output.
    """
    _check_input(mech, ranking)
    order = np.asarray(invert(ranking), dtype=np.int64)
    cdfs = _stage_cdfs(mech)
    out = np.empty((n, mech.m), dtype=np.int64)
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        codes = _sample_codes(cdfs, stop - start, rng)
        out[start:stop] = _kernels.decode_insertion_codes(order, codes)
    return out


def synthesize(mech: MallowsMechanism, ranking: Ranking, rng: np.random.Generator) -> Ranking:
    """Draw one synthetic ranking distributed as ``mallows_pmf``."""
    return Ranking.from_array(synthesize_many(mech, ranking, 1, rng)[0])


def _synthesize_one_reference(
    mech: MallowsMechanism, ranking: Ranking, rng: np.random.Generator
) -> Ranking:
    """Literal stage-by-stage sampler used as a test oracle.

    Computes the slot concordance gain tau(k) by explicit pair counting and
    asserts it equals k before sampling, then applies the documented
    rank-shift update.  Consumes one uniform per stage, exactly like
    ``synthesize``.
    """
    _check_input(mech, ranking)
    phi = ranking.ranks
    order = invert(ranking)
    tilde: dict[int, int] = {order[0]: 1}
    chi = [order[0]]
    for t in range(2, mech.m + 1):
        j = order[t - 1]
        taus = [
            sum(
                1
                for l in chi
                if (t - phi[l]) * (k + 0.5 - tilde[l]) > 0
            )
            for k in range(t)
        ]
        assert taus == list(range(t)), f"stage {t}: tau {taus}"
        cdf = _stage_cdf(mech.pair_weight, t)
        u = rng.random()
        v = 0
        while cdf[v] <= u and v < t - 1:
            v += 1
        for i in chi:
            if tilde[i] > v + 0.5:
                tilde[i] += 1
        tilde[j] = v + 1
        chi.append(j)
    ranks = [0] * mech.m
    for item, rank in tilde.items():
        ranks[item] = rank
    return Ranking(tuple(ranks))


def insertion_codes(mech_or_m, input_ranking: Ranking, output: Ranking) -> np.ndarray:
    """Per-stage insertion positions that rebuild ``output`` from
    ``input_ranking``'s processing order."""
    m = input_ranking.m
    order = invert(input_ranking)
    out = output.to_array()
    codes = np.empty(m - 1, dtype=np.int64)
    for t in range(2, m + 1):
        placed = [order[s] for s in range(t - 1)]
        codes[t - 2] = int(np.sum(out[placed] < out[order[t - 1]]))
    return codes


def chain_probability(mech: MallowsMechanism, input_ranking: Ranking, output: Ranking) -> float:
    """Probability of ``output`` as the product of its stage probabilities."""
    _check_input(mech, input_ranking)
    _check_input(mech, output)
    codes = insertion_codes(mech, input_ranking, output)
    prob = 1.0
    for t in range(2, mech.m + 1):
        prob *= stage_distribution(mech, t).probabilities[codes[t - 2]]
    return prob


def _log_partition(beta: float, m: int) -> float:
    """log Z where Z is the q-factorial prod_t sum_{k<t} q^k."""
    total = 0.0
    for t in range(2, m + 1):
        logw = beta * np.arange(t, dtype=np.float64)
        mx = logw.max()
        total += mx + math.log(np.exp(logw - mx).sum())
    return total


def mallows_pmf(mech: MallowsMechanism, input_ranking: Ranking, output: Ranking) -> float:
    """Closed-form pmf: exp(beta * C(input, output)) / Z.

    Equals ``chain_probability`` exactly; the two are computed by different
    routes (per-stage product vs. global normalizer) and cross-checked in
    tests.
    """
    _check_input(mech, input_ranking)
    _check_input(mech, output)
    if math.isinf(mech.pair_weight):
        return 1.0 if input_ranking.ranks == output.ranks else 0.0
    c = concordant_pairs(input_ranking, output)
    return math.exp(mech.pair_weight * c - _log_partition(mech.pair_weight, mech.m))


def _laplace_from_uniform(u: np.ndarray, scale: float) -> np.ndarray:
    """Inverse-CDF Laplace(0, scale) from uniforms in [0, 1).

    The u = 0 endpoint is nudged to keep the output finite.
    """
    v = 2.0 * u - 1.0
    mag = np.maximum(-np.abs(v), -1.0 + 2.0 ** -53)
    return -scale * np.sign(v) * np.log1p(mag)


def laplace_perturb_many(
    mech: LaplaceMechanism, ranking: Ranking, n: int, rng: np.random.Generator
) -> np.ndarray:
    """n noisy score vectors: ranks plus i.i.d. Laplace(0, scale)."""
    _check_input(mech, ranking)
    base = ranking.to_array().astype(np.float64)
    out = np.empty((n, mech.m), dtype=np.float64)
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        u = rng.random((stop - start, mech.m))
        out[start:stop] = base + _laplace_from_uniform(u, mech.scale)
    return out


def laplace_perturb(mech: LaplaceMechanism, ranking: Ranking, rng: np.random.Generator) -> NoisyScores:
    """One noisy score vector; feed to ``induced_ranking`` for a ranking."""
    return NoisyScores(tuple(laplace_perturb_many(mech, ranking, 1, rng)[0]))


def induced_ranking_many(scores: np.ndarray) -> np.ndarray:
    """Rank each row by ascending score; ties broken by item index."""
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise NonFiniteScore("scores must be finite")
    m = scores.shape[1]
    order = np.argsort(scores, axis=1, kind="stable")
    ranks = np.empty_like(order, dtype=np.int64)
    np.put_along_axis(ranks, order, np.arange(1, m + 1, dtype=np.int64)[None, :], axis=1)
    return ranks


def induced_ranking(scores) -> Ranking:
    """Ranking with rank 1 at the smallest score (index tie-break)."""
    values = scores.to_array() if isinstance(scores, NoisyScores) else np.asarray(scores, dtype=np.float64)
    if values.ndim != 1 or values.shape[0] < 2:
        raise ValueError("need a flat score vector of length >= 2")
    return Ranking.from_array(induced_ranking_many(values[None, :])[0])


def sample_stage_positions(
    mech: MallowsMechanism, t: int, n: int, rng: np.random.Generator
) -> np.ndarray:
    """n draws of the stage-t insertion position (0..t-1)."""
    _check_stage(mech, t)
    cdf = _stage_cdf(mech.pair_weight, t)
    u = rng.random(n)
    return np.minimum(np.searchsorted(cdf, u, side="right"), t - 1).astype(np.int64)


def expected_stage_position(mech: MallowsMechanism, t: int) -> tuple[float, float]:
    """Mean and variance of the stage-t insertion position.

    Closed forms (with q = exp(beta)):

        E V   = (t-1) + t/(q^t - 1) - 1/(q - 1)
        E V^2 = (t-1)^2 + ((t-1)^2 - 1)/(q^t - 1) - (2 E V - 1)/(q - 1)

    algebraically identical to the geometric-sum expressions; the expm1
    form avoids overflow for any epsilon.  Below beta = 1e-3 the closed
    form cancels catastrophically (variance error ~1e-16/beta^2) and the
    exact finite sums are used instead.  epsilon = 0 returns the uniform
    limit ((t-1)/2, (t^2-1)/12); epsilon = inf returns (t-1, 0).
    """
    _check_stage(mech, t)
    beta = mech.pair_weight
    if beta == 0.0:
        return (t - 1) / 2.0, (t * t - 1) / 12.0
    if math.isinf(beta):
        return float(t - 1), 0.0
    if beta < 1e-3 or beta * t > 700.0:
        p = _stage_probs(beta, t)
        k = np.arange(t, dtype=np.float64)
        mean = float(np.dot(k, p))
        return mean, float(np.dot((k - mean) ** 2, p))
    em1_t = math.expm1(beta * t)
    em1_1 = math.expm1(beta)
    mean = (t - 1) + t / em1_t - 1.0 / em1_1
    second = (t - 1) ** 2 + ((t - 1) ** 2 - 1.0) / em1_t - (2.0 * mean - 1.0) / em1_1
    return mean, second - mean * mean


def expected_concordance_mallows(m: int, epsilon: float) -> float:
    """Expected concordant-pair count between input and synthetic ranking.

    Sum over stages of the expected insertion position; lies strictly
    between m(m-1)/4 (epsilon -> 0) and m(m-1)/2 (epsilon -> inf).
    """
    _check_m(m)
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    mech = MallowsMechanism(epsilon, m)
    return sum(expected_stage_position(mech, t)[0] for t in range(2, m + 1))


def expected_concordance_laplace(m: int, epsilon: float) -> float:
    """Expected concordant-pair count for the calibrated Laplace baseline.

    For rank gap d the pair survives with probability
    1 - exp(-lam*d) * (1/2 + d*lam/4) where lam = epsilon / (2(m-1)),
    from the CDF of the difference of two Laplace variables; summed over
    the m-d pairs at each gap.
    """
    _check_m(m)
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    lam = epsilon / (2.0 * (m - 1))
    total = 0.0
    for d in range(1, m):
        p = 1.0 - math.exp(-lam * d) * (0.5 + d * lam / 4.0)
        total += (m - d) * p
    return total
