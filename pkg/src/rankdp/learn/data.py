"""Dataset generation, privatization, and file ingestion for the ranking
learner.

Rank convention inside the learning pipeline: rank = position in ascending
score order, so a HIGHER rank means a HIGHER preference score and the
training indicator rank_i > rank_j lines up with score_i > score_j.  The
mechanisms are convention-agnostic (they act on permutations), so this
choice is local to this subpackage.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from ..core import Ranking
from ..errors import BadDimensions, ParseError, UnknownItemId
from ..mechanisms import (
    LaplaceMechanism,
    MallowsMechanism,
    induced_ranking_many,
    laplace_perturb_many,
    synthesize_many,
)
from ..seeding import spawn_generator

MECHANISM_KINDS = ("mallows", "laplace")


@dataclass(frozen=True)
class UserItemData:
    """Feature matrices, true scores, and the induced rankings."""

    user_features: np.ndarray  # (n, p)
    item_features: np.ndarray  # (m, q)
    true_scores: np.ndarray  # (n, m)
    rankings: np.ndarray  # (n, m) ranks 1..m, ascending-score convention
    per_user_epsilon: Optional[np.ndarray] = None  # (n,)

    def __post_init__(self):
        n, p = self.user_features.shape
        m, q = self.item_features.shape
        if n < 1 or m < 2:
            raise BadDimensions(f"need n >= 1 users and m >= 2 items, got n={n}, m={m}")
        if self.true_scores.shape != (n, m) or self.rankings.shape != (n, m):
            raise BadDimensions("scores/rankings must be (n, m)")
        if self.per_user_epsilon is not None and self.per_user_epsilon.shape != (n,):
            raise BadDimensions("per_user_epsilon must be (n,)")

    @property
    def n(self) -> int:
        return self.user_features.shape[0]

    @property
    def m(self) -> int:
        return self.item_features.shape[0]

    def with_epsilons(self, epsilons) -> "UserItemData":
        eps = np.broadcast_to(np.asarray(epsilons, dtype=np.float64), (self.n,)).copy()
        if not np.all(eps > 0):
            raise ValueError("per-user epsilon values must be > 0")
        return replace(self, per_user_epsilon=eps)


@dataclass(frozen=True)
class RankingDataset:
    """Rankings keyed by user id over a fixed item universe."""

    user_ids: tuple
    item_ids: tuple
    rankings: np.ndarray  # (n, m)
    epsilons: Optional[np.ndarray] = None

    def __post_init__(self):
        n = len(self.user_ids)
        if self.rankings.shape != (n, len(self.item_ids)):
            raise BadDimensions("rankings must be (len(user_ids), len(item_ids))")


def generate_dataset(
    n: int,
    m: int,
    alpha,
    beta,
    rng: np.random.Generator,
    p: int = 4,
    q: int = 4,
    item_features=None,
) -> UserItemData:
    """Linear preference model: features uniform on (-3, 3), score
    r_ui = alpha . x_u + beta . y_i, rank = ascending-score position.

    Pass ``item_features`` to reuse a fixed item universe (replications of
    an experiment redraw users, not items)."""
    if n < 1 or m < 2:
        raise BadDimensions(f"need n >= 1 and m >= 2, got n={n}, m={m}")
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    if alpha.shape != (p,) or beta.shape != (q,):
        raise BadDimensions(f"alpha must be ({p},) and beta ({q},)")
    x = rng.uniform(-3.0, 3.0, size=(n, p))
    if item_features is None:
        y = rng.uniform(-3.0, 3.0, size=(m, q))
    else:
        y = np.asarray(item_features, dtype=np.float64)
        if y.shape != (m, q):
            raise BadDimensions(f"item_features must be ({m}, {q})")
    scores = (x @ alpha)[:, None] + (y @ beta)[None, :]
    return UserItemData(
        user_features=x,
        item_features=y,
        true_scores=scores,
        rankings=induced_ranking_many(scores),
    )


def privatize_dataset(
    data: UserItemData,
    mechanism: str,
    base_seed: int,
    user_seeds: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """One synthetic ranking per user at that user's budget.

    Each user gets an independent generator derived from
    (base_seed, "privatize", u), or from the explicit ``user_seeds[u]``
    when given (so swapping two users' seeds swaps their outputs exactly).
    """
    if mechanism not in MECHANISM_KINDS:
        raise ValueError(f"mechanism must be one of {MECHANISM_KINDS}, got {mechanism!r}")
    if data.per_user_epsilon is None:
        raise ValueError("dataset has no per-user epsilon; call with_epsilons first")
    if user_seeds is not None and len(user_seeds) != data.n:
        raise BadDimensions("user_seeds must have one entry per user")
    out = np.empty_like(data.rankings)
    for u in range(data.n):
        if user_seeds is not None:
            rng = spawn_generator(int(user_seeds[u]))
        else:
            rng = spawn_generator(base_seed, "privatize", u)
        eps = float(data.per_user_epsilon[u])
        user_ranking = Ranking(tuple(int(v) for v in data.rankings[u]))
        if mechanism == "mallows":
            mech = MallowsMechanism(eps, data.m)
            out[u] = synthesize_many(mech, user_ranking, 1, rng)[0]
        else:
            mech = LaplaceMechanism(eps, data.m)
            noisy = laplace_perturb_many(mech, user_ranking, 1, rng)
            out[u] = induced_ranking_many(noisy)[0]
    return out


def ingest_order_file(
    path,
    skip_header_lines: int = 0,
    skip_fields: int = 0,
    keep_items: Optional[Sequence[int]] = None,
) -> RankingDataset:
    """Parse an order file: one record per user listing item ids from most-
    to least-preferred.

    ``skip_fields`` leading whitespace-separated fields are dropped from
    every record.  With ``keep_items``, only those ids are retained (their
    order fixes the dense re-index); every record must mention each kept
    id.  Rank 1 is the most preferred item.
    """
    records: list[list[int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if line_no <= skip_header_lines:
                continue
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) <= skip_fields:
                raise ParseError(line_no, f"expected more than {skip_fields} fields")
            try:
                ids = [int(tok) for tok in tokens[skip_fields:]]
            except ValueError as exc:
                raise ParseError(line_no, f"non-integer item id ({exc})") from None
            if len(set(ids)) != len(ids):
                raise ParseError(line_no, "duplicate item id in record")
            records.append(ids)
    if not records:
        raise ParseError(0, "no records in file")

    universe: set[int] = set()
    for ids in records:
        universe.update(ids)
    if keep_items is None:
        kept = sorted(universe)
    else:
        kept = [int(i) for i in keep_items]
        missing = [i for i in kept if i not in universe]
        if missing:
            raise UnknownItemId(f"item ids {missing} never occur in {path}")
    index = {item: col for col, item in enumerate(kept)}

    n, m = len(records), len(kept)
    if m < 2:
        raise ParseError(0, "need at least two items after subsetting")
    rankings = np.zeros((n, m), dtype=np.int64)
    offset = skip_header_lines
    for row, ids in enumerate(records):
        rank = 1
        seen = 0
        for item in ids:
            col = index.get(item)
            if col is not None:
                rankings[row, col] = rank
                rank += 1
                seen += 1
        if seen != m:
            raise ParseError(offset + row + 1, f"record lists {seen} of the {m} kept items")
    return RankingDataset(
        user_ids=tuple(range(n)), item_ids=tuple(kept), rankings=rankings
    )


def write_ranking_csv(path, dataset: RankingDataset) -> None:
    """Wide CSV: ``user_id,item_0,...,item_{m-1}[,epsilon]``."""
    m = len(dataset.item_ids)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["user_id"] + [f"item_{i}" for i in range(m)]
        if dataset.epsilons is not None:
            header.append("epsilon")
        writer.writerow(header)
        for row, uid in enumerate(dataset.user_ids):
            cells = [uid] + [int(v) for v in dataset.rankings[row]]
            if dataset.epsilons is not None:
                cells.append(repr(float(dataset.epsilons[row])))
            writer.writerow(cells)


def read_ranking_csv(path) -> RankingDataset:
    """Inverse of ``write_ranking_csv``; validates each row is a ranking."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(1, "missing header") from None
        has_eps = header and header[-1] == "epsilon"
        item_cols = header[1 : -1 if has_eps else len(header)]
        if header[:1] != ["user_id"] or any(
            col != f"item_{i}" for i, col in enumerate(item_cols)
        ):
            raise ParseError(1, f"unexpected header {header!r}")
        m = len(item_cols)
        user_ids, rows, eps = [], [], []
        for line_no, record in enumerate(reader, start=2):
            if not record:
                continue
            expected = 1 + m + (1 if has_eps else 0)
            if len(record) != expected:
                raise ParseError(line_no, f"expected {expected} cells, got {len(record)}")
            user_ids.append(record[0])
            try:
                ranks = [int(v) for v in record[1 : 1 + m]]
                Ranking(tuple(ranks))
                rows.append(ranks)
                if has_eps:
                    eps.append(float(record[1 + m]))
            except Exception as exc:
                raise ParseError(line_no, str(exc)) from None
    rankings = (
        np.array(rows, dtype=np.int64) if rows else np.zeros((0, m), dtype=np.int64)
    )
    return RankingDataset(
        user_ids=tuple(user_ids),
        item_ids=tuple(range(m)),
        rankings=rankings,
        epsilons=np.array(eps) if has_eps else None,
    )


def write_feature_csv(path, ids, features: np.ndarray, id_column: str) -> None:
    """Feature CSV: ``<id_column>,f0,...,f{d-1}``."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([id_column] + [f"f{i}" for i in range(features.shape[1])])
        for row, uid in enumerate(ids):
            writer.writerow([uid] + [repr(float(v)) for v in features[row]])


def read_feature_csv(path) -> tuple[tuple, np.ndarray]:
    """Inverse of ``write_feature_csv``; returns (ids, (k, d) matrix)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(1, "missing header") from None
        d = len(header) - 1
        if d < 1 or any(col != f"f{i}" for i, col in enumerate(header[1:])):
            raise ParseError(1, f"unexpected header {header!r}")
        ids, rows = [], []
        for line_no, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != d + 1:
                raise ParseError(line_no, f"expected {d + 1} cells, got {len(record)}")
            ids.append(record[0])
            try:
                rows.append([float(v) for v in record[1:]])
            except ValueError as exc:
                raise ParseError(line_no, str(exc)) from None
    return tuple(ids), np.array(rows, dtype=np.float64).reshape(len(rows), d)
