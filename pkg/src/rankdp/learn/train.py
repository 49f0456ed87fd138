"""Pairwise surrogate-loss training on privatized rankings.

The objective is the mean logistic loss log(1 + exp(-(f_ui - f_uj))) over
all ordered item pairs the synthetic ranking places as i above j, plus an
optional ridge penalty.  Optimization is plain mini-batch gradient descent
with a fixed step and early stopping on held-out-user pairwise agreement;
everything is deterministic given the config seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import Diverged, EmptyTestSet, NonFiniteLoss
from ..seeding import spawn_generator
from .models import build_model


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.2
    batch_pairs: int = 4096
    max_epochs: int = 200
    val_fraction: float = 0.25
    patience: int = 20
    ridge: float = 0.0
    seed: int = 0
    loss: str = "logistic"
    model: str = "linear"
    hidden: tuple[int, ...] = (10, 10)
    embedding: int = 10

    def __post_init__(self):
        if self.loss != "logistic":
            raise ValueError(f"only the logistic surrogate is supported, got {self.loss!r}")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in [0, 1)")
        if self.batch_pairs < 1 or self.max_epochs < 0 or self.patience < 0:
            raise ValueError("batch_pairs >= 1, max_epochs >= 0, patience >= 0 required")
        if self.ridge < 0:
            raise ValueError("ridge must be >= 0")


class TrainResult(NamedTuple):
    model: object
    train_accuracy: float
    val_accuracy: float
    epochs_run: int


class PairAccuracy(NamedTuple):
    literal: float
    symmetric: float


def build_pairs(ranks: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Ordered training triples (u, i, j) with rank_u[i] > rank_u[j]."""
    ranks = np.asarray(ranks)
    n, m = ranks.shape
    above = ranks[:, :, None] > ranks[:, None, :]
    u, i, j = np.nonzero(above)
    return u, i, j


def _sigmoid_neg(d: np.ndarray) -> np.ndarray:
    """sigma(-d) = 1 / (1 + exp(d)), stable for any d."""
    return np.exp(-np.logaddexp(0.0, d))


def pairwise_loss_and_gradient(model, x, y, pairs, ridge: float = 0.0):
    """Mean logistic pairwise loss and exact parameter gradients.

    ``pairs`` is the (u, i, j) triple arrays from ``build_pairs``; the loss
    treats them as `i preferred above j`.
    """
    u, i, j = pairs
    scores = model.score_matrix(x, y)
    d = scores[u, i] - scores[u, j]
    loss = float(np.mean(np.logaddexp(0.0, -d)))
    params = model.params
    loss += ridge * sum(float(np.sum(w * w)) for w in params)
    if not math.isfinite(loss):
        raise NonFiniteLoss(f"loss became {loss}")
    coeff = -_sigmoid_neg(d) / d.shape[0]
    upstream = np.zeros_like(scores)
    np.add.at(upstream, (u, i), coeff)
    np.add.at(upstream, (u, j), -coeff)
    grads = model.score_gradients(x, y, upstream)
    if ridge:
        grads = [g + 2.0 * ridge * w for g, w in zip(grads, params)]
    return loss, grads


def ordered_agreement(scores: np.ndarray, reference: np.ndarray) -> PairAccuracy:
    """Fraction of ordered pairs where the score order matches the
    reference order, normalized by n * m * (m-1).

    The literal fraction tops out at 1/2 because only one direction of each
    unordered pair can agree; the symmetric value doubles it.
    """
    scores = np.asarray(scores, dtype=np.float64)
    reference = np.asarray(reference)
    n, m = scores.shape
    if n == 0:
        raise EmptyTestSet("no users to evaluate")
    ref_above = reference[:, :, None] > reference[:, None, :]
    model_above = scores[:, :, None] > scores[:, None, :]
    hits = int(np.count_nonzero(ref_above & model_above))
    literal = hits / (n * m * (m - 1))
    return PairAccuracy(literal=literal, symmetric=2.0 * literal)


def pairwise_accuracy(model, x_test, y, true_scores) -> PairAccuracy:
    """Agreement between model scores and true preference scores on test
    users; the symmetric field is the headline accuracy in [0, 1]."""
    x_test = np.asarray(x_test, dtype=np.float64)
    if x_test.shape[0] == 0:
        raise EmptyTestSet("no test users")
    return ordered_agreement(model.score_matrix(x_test, y), true_scores)


def _check_finite_params(model) -> None:
    for w in model.params:
        if not np.all(np.isfinite(w)):
            raise Diverged("model parameters became non-finite")


def train(x, y, synthetic_ranks, config: TrainConfig) -> TrainResult:
    """Fit a two-tower scorer on privatized rankings.

    The last round(val_fraction * n) users are held out; after every epoch
    the symmetric pairwise agreement against their synthetic rankings is
    evaluated and the best parameters are kept.  Training stops after
    ``patience`` epochs without improvement or at ``max_epochs`` (0 epochs
    returns the freshly initialized model).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    ranks = np.asarray(synthetic_ranks, dtype=np.int64)
    n = x.shape[0]
    n_val = int(round(config.val_fraction * n))
    if n_val >= n and config.val_fraction > 0:
        raise ValueError("validation split leaves no training users")
    x_train, x_val = x[: n - n_val], x[n - n_val :]
    r_train, r_val = ranks[: n - n_val], ranks[n - n_val :]

    model = build_model(
        config.model,
        x.shape[1],
        y.shape[1],
        spawn_generator(config.seed, "init"),
        hidden=tuple(config.hidden),
        embedding=config.embedding,
    )
    pairs = build_pairs(r_train)
    n_pairs = pairs[0].shape[0]

    def val_accuracy(mdl) -> float:
        if n_val == 0:
            return math.nan
        return ordered_agreement(mdl.score_matrix(x_val, y), r_val).symmetric

    best_params = [w.copy() for w in model.params]
    best_val = val_accuracy(model) if n_val else -math.inf
    stale = 0
    epochs_run = 0
    for epoch in range(config.max_epochs):
        perm = spawn_generator(config.seed, "shuffle", epoch).permutation(n_pairs)
        for start in range(0, n_pairs, config.batch_pairs):
            take = perm[start : start + config.batch_pairs]
            batch = (pairs[0][take], pairs[1][take], pairs[2][take])
            _, grads = pairwise_loss_and_gradient(model, x_train, y, batch, config.ridge)
            model.params = [w - config.learning_rate * g for w, g in zip(model.params, grads)]
        _check_finite_params(model)
        epochs_run = epoch + 1
        if n_val:
            acc = val_accuracy(model)
            if acc > best_val + 1e-12:
                best_val = acc
                best_params = [w.copy() for w in model.params]
                stale = 0
            else:
                stale += 1
                if stale > config.patience:
                    break
        else:
            best_params = [w.copy() for w in model.params]
    model.params = best_params
    train_acc = ordered_agreement(model.score_matrix(x_train, y), r_train).symmetric
    return TrainResult(
        model=model,
        train_accuracy=train_acc,
        val_accuracy=best_val if n_val else math.nan,
        epochs_run=epochs_run,
    )
