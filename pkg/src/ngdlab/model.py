"""Dense multi-layer network with per-sample backpropagation caches.

Layout conventions (one column per sample):

* ``I_l``  (d_i + 1) x m : layer input with a trailing row of ones (bias feature)
* ``O_l``  d_o x m       : preactivation, ``O_l = W_l^T I_l``
* ``G_l``  d_o x m       : per-sample derivative of the loss w.r.t. ``O_l``

``G_l`` carries no ``1/m`` factor; the batch-mean gradient is
``g_l = I_l G_l^T / m``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NumericError, ShapeError, StateError

ACTIVATIONS = ("tanh", "relu", "identity")
HEADS = ("gaussian", "categorical")
PROB_FLOOR = 1e-12


@dataclass
class DenseLayer:
    W: np.ndarray  # (d_i + 1) x d_o, last row is the bias
    activation: str = "tanh"

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        if self.W.ndim != 2 or self.W.shape[0] < 2 or self.W.shape[1] < 1:
            raise ShapeError(f"layer weight must be (d_i+1) x d_o with d_i, d_o >= 1, got {self.W.shape}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def d_in(self) -> int:
        return self.W.shape[0] - 1

    @property
    def d_out(self) -> int:
        return self.W.shape[1]


@dataclass
class NetworkModel:
    layers: list[DenseLayer]
    head: str = "gaussian"

    def __post_init__(self):
        if not self.layers:
            raise ShapeError("network needs at least one layer")
        if self.head not in HEADS:
            raise ValueError(f"unknown head {self.head!r}")
        for a, b in zip(self.layers[:-1], self.layers[1:]):
            if a.d_out != b.d_in:
                raise ShapeError(f"layer widths do not chain: {a.d_out} -> {b.d_in}")
        if self.layers[-1].activation != "identity":
            raise ValueError("output layer must use the identity activation")

    @property
    def d_in(self) -> int:
        return self.layers[0].d_in

    @property
    def d_out(self) -> int:
        return self.layers[-1].d_out

    @property
    def sizes(self) -> list[int]:
        return [self.d_in] + [layer.d_out for layer in self.layers]

    def copy(self) -> "NetworkModel":
        return copy.deepcopy(self)


@dataclass
class BatchCache:
    inputs: list[np.ndarray]
    preacts: list[np.ndarray]
    predictions: np.ndarray
    grads: list[np.ndarray] | None = None
    net_id: int = field(default=0, repr=False)

    @property
    def m(self) -> int:
        return self.inputs[0].shape[1]


def init_network(
    sizes: Sequence[int],
    activation: str = "tanh",
    head: str = "gaussian",
    seed: int | np.random.Generator | None = 0,
) -> NetworkModel:
    """Glorot-uniform network with the given layer widths ``[d_in, h1, ..., d_out]``."""
    if len(sizes) < 2:
        raise ShapeError("sizes must contain at least input and output widths")
    rng = np.random.default_rng(seed)
    layers = []
    for k, (d_i, d_o) in enumerate(zip(sizes[:-1], sizes[1:])):
        r = np.sqrt(6.0 / (d_i + d_o))
        W = rng.uniform(-r, r, size=(d_i + 1, d_o))
        act = "identity" if k == len(sizes) - 2 else activation
        layers.append(DenseLayer(W, act))
    return NetworkModel(layers, head)


def _activate(o: np.ndarray, kind: str) -> np.ndarray:
    if kind == "tanh":
        return np.tanh(o)
    if kind == "relu":
        return np.maximum(o, 0.0)
    return o


def _activation_grad(o: np.ndarray, kind: str) -> np.ndarray:
    if kind == "tanh":
        t = np.tanh(o)
        return 1.0 - t * t
    if kind == "relu":
        return (o > 0.0).astype(np.float64)
    return np.ones_like(o)


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=0, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=0, keepdims=True)


def augment(h: np.ndarray) -> np.ndarray:
    """Append the constant bias row."""
    return np.vstack([h, np.ones((1, h.shape[1]))])


def forward(net: NetworkModel, X) -> tuple[np.ndarray, BatchCache]:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != net.d_in:
        raise ShapeError(f"input has {X.shape[0]} features, network expects {net.d_in}")
    inputs, preacts = [], []
    h = X
    for layer in net.layers:
        I = augment(h)
        O = layer.W.T @ I
        inputs.append(I)
        preacts.append(O)
        h = _activate(O, layer.activation)
    if not np.all(np.isfinite(h)):
        raise NumericError("non-finite activations in forward pass")
    predictions = softmax(h) if net.head == "categorical" else h
    return predictions, BatchCache(inputs, preacts, predictions, net_id=id(net))


def loss_eval(predictions, targets, head: str) -> float:
    """Mean negative log-likelihood (up to a parameter-independent constant)."""
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape:
        raise ShapeError(f"predictions {predictions.shape} vs targets {targets.shape}")
    m = predictions.shape[1]
    if head == "gaussian":
        return float(0.5 * np.sum((predictions - targets) ** 2) / m)
    if head == "categorical":
        p_true = np.sum(predictions * targets, axis=0)
        return float(-np.sum(np.log(np.maximum(p_true, PROB_FLOOR))) / m)
    raise ValueError(f"unknown head {head!r}")


def backprop(net: NetworkModel, cache: BatchCache, g_out: np.ndarray) -> list[np.ndarray]:
    """Propagate an output-layer preactivation derivative to every layer.

    Returns the list of per-sample ``G_l`` matrices; the cache is not modified.
    """
    G = np.asarray(g_out, dtype=np.float64)
    out = [None] * len(net.layers)
    out[-1] = G
    for l in range(len(net.layers) - 1, 0, -1):
        below = net.layers[l - 1]
        G = (net.layers[l].W[:-1] @ G) * _activation_grad(cache.preacts[l - 1], below.activation)
        out[l - 1] = G
    return out


def backward(net: NetworkModel, cache: BatchCache | None, targets) -> list[np.ndarray]:
    """Fill ``cache.grads`` with per-sample ``G_l`` and return the batch-mean gradients."""
    if cache is None:
        raise StateError("backward called without a forward cache")
    if cache.net_id != id(net):
        raise StateError("cache was produced by a different network")
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape != cache.predictions.shape:
        raise ShapeError(f"targets {targets.shape} vs predictions {cache.predictions.shape}")
    cache.grads = backprop(net, cache, cache.predictions - targets)
    m = cache.m
    return [I @ G.T / m for I, G in zip(cache.inputs, cache.grads)]


def sample_labels(net: NetworkModel, X, seed=None, rng=None) -> np.ndarray:
    """Draw targets from the model's own predictive distribution."""
    if rng is None:
        rng = np.random.default_rng(seed)
    pred, _ = forward(net, X)
    if net.head == "gaussian":
        return pred + rng.standard_normal(pred.shape)
    cdf = np.cumsum(pred, axis=0)
    u = rng.random(pred.shape[1])
    cls = np.minimum((u[None, :] >= cdf).sum(axis=0), pred.shape[0] - 1)
    return one_hot(cls, pred.shape[0])


def one_hot(labels, k: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=int)
    Y = np.zeros((k, labels.size))
    Y[labels, np.arange(labels.size)] = 1.0
    return Y


def param_count(net: NetworkModel) -> int:
    return sum(layer.W.size for layer in net.layers)


def flatten_grads(grads: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate([np.asarray(g, dtype=np.float64).reshape(-1) for g in grads])[:, None]


def unflatten(vec, net: NetworkModel) -> list[np.ndarray]:
    vec = np.asarray(vec, dtype=np.float64).reshape(-1)
    if vec.size != param_count(net):
        raise ShapeError(f"vector of length {vec.size} does not match {param_count(net)} parameters")
    out, start = [], 0
    for layer in net.layers:
        stop = start + layer.W.size
        out.append(vec[start:stop].reshape(layer.W.shape))
        start = stop
    return out


def get_params(net: NetworkModel) -> np.ndarray:
    return flatten_grads([layer.W for layer in net.layers])[:, 0]


def set_params(net: NetworkModel, theta) -> None:
    for layer, W in zip(net.layers, unflatten(theta, net)):
        layer.W = W.copy()


def apply_update(net: NetworkModel, deltas: Sequence[np.ndarray]) -> None:
    """In-place ``W_l -= delta_l`` for every layer."""
    if len(deltas) != len(net.layers):
        raise ShapeError("one delta per layer required")
    for layer, d in zip(net.layers, deltas):
        d = np.asarray(d, dtype=np.float64)
        if d.shape != layer.W.shape:
            raise ShapeError(f"delta {d.shape} does not match weight {layer.W.shape}")
    for layer, d in zip(net.layers, deltas):
        layer.W -= d
