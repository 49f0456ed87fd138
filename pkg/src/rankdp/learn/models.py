"""Two-tower scorers: a bilinear-free linear model and a small MLP.

Both expose the same surface: ``score_matrix`` produces the (n, m) score
table for a user-feature matrix X and item-feature matrix Y, and
``score_gradients`` backpropagates a dense (n, m) upstream gradient G into
per-parameter gradients.  Parameters live in a flat list of arrays so the
training loop and the finite-difference checks stay model-agnostic.
"""

from __future__ import annotations

import numpy as np


class LinearTwoTower:
    """f(x, y) = a . x + b . y; parameters [a, b]."""

    kind = "linear"

    def __init__(self, a: np.ndarray, b: np.ndarray):
        self.params = [np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)]

    @classmethod
    def initialize(cls, p: int, q: int, rng: np.random.Generator) -> "LinearTwoTower":
        return cls(rng.uniform(-0.1, 0.1, p), rng.uniform(-0.1, 0.1, q))

    @property
    def parameter_count(self) -> int:
        return sum(w.size for w in self.params)

    def score_matrix(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        a, b = self.params
        return (x @ a)[:, None] + (y @ b)[None, :]

    def score_gradients(self, x: np.ndarray, y: np.ndarray, upstream: np.ndarray):
        return [x.T @ upstream.sum(axis=1), y.T @ upstream.sum(axis=0)]


class MLPTwoTower:
    """Two tanh MLP towers combined by dot product of their embeddings.

    Each tower maps its feature vector through hidden layers with tanh and
    a final linear layer into the shared embedding space.  Parameters are
    stored flat as [Wu1, bu1, ..., Wi1, bi1, ...].
    """

    kind = "mlp"

    def __init__(self, user_layers, item_layers):
        self.user_layers = [(np.asarray(w), np.asarray(b)) for w, b in user_layers]
        self.item_layers = [(np.asarray(w), np.asarray(b)) for w, b in item_layers]

    @classmethod
    def initialize(
        cls,
        p: int,
        q: int,
        rng: np.random.Generator,
        hidden=(10, 10),
        embedding: int = 10,
    ) -> "MLPTwoTower":
        def tower(d_in):
            widths = [d_in, *hidden, embedding]
            return [
                (
                    rng.uniform(-0.1, 0.1, (widths[i], widths[i + 1])),
                    rng.uniform(-0.1, 0.1, widths[i + 1]),
                )
                for i in range(len(widths) - 1)
            ]

        return cls(tower(p), tower(q))

    @property
    def params(self) -> list[np.ndarray]:
        flat = []
        for w, b in self.user_layers + self.item_layers:
            flat.extend((w, b))
        return flat

    @params.setter
    def params(self, values) -> None:
        it = iter(values)
        layers = []
        for w, _ in self.user_layers + self.item_layers:
            layers.append((next(it), next(it)))
        k = len(self.user_layers)
        self.user_layers = layers[:k]
        self.item_layers = layers[k:]

    @property
    def parameter_count(self) -> int:
        return sum(w.size for w in self.params)

    @staticmethod
    def _forward(layers, inp):
        acts = [inp]
        h = inp
        for idx, (w, b) in enumerate(layers):
            z = h @ w + b
            h = np.tanh(z) if idx < len(layers) - 1 else z
            acts.append(h)
        return h, acts

    @staticmethod
    def _backward(layers, acts, upstream):
        grads = []
        delta = upstream
        for idx in range(len(layers) - 1, -1, -1):
            w, _ = layers[idx]
            if idx < len(layers) - 1:
                delta = delta * (1.0 - acts[idx + 1] ** 2)
            grads.append((acts[idx].T @ delta, delta.sum(axis=0)))
            delta = delta @ w.T
        grads.reverse()
        return grads

    def score_matrix(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        u, _ = self._forward(self.user_layers, x)
        v, _ = self._forward(self.item_layers, y)
        return u @ v.T

    def score_gradients(self, x: np.ndarray, y: np.ndarray, upstream: np.ndarray):
        u, user_acts = self._forward(self.user_layers, x)
        v, item_acts = self._forward(self.item_layers, y)
        user_grads = self._backward(self.user_layers, user_acts, upstream @ v)
        item_grads = self._backward(self.item_layers, item_acts, upstream.T @ u)
        flat = []
        for gw, gb in user_grads + item_grads:
            flat.extend((gw, gb))
        return flat


def build_model(kind: str, p: int, q: int, rng: np.random.Generator, hidden=(10, 10), embedding: int = 10):
    if kind == "linear":
        return LinearTwoTower.initialize(p, q, rng)
    if kind == "mlp":
        return MLPTwoTower.initialize(p, q, rng, hidden=hidden, embedding=embedding)
    raise ValueError(f"model kind must be linear or mlp, got {kind!r}")
