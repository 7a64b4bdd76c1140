"""Fisher information in explicit, block and Gram (sample-space) forms.

Per-sample layer gradients are rank-one: ``g_{l,i} = I_l[:, i] G_l[:, i]^T``.
Stacking their row-major vectorizations gives the layer Jacobian
``J_l = (I_l * G_l)^T`` (column-wise Khatri-Rao), an m x p_l matrix whose
Gram matrix can be formed without materializing ``J_l``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import CapacityError, ShapeError, StateError
from .model import BatchCache, NetworkModel, backprop, backward, flatten_grads, forward

DENSE_CAP = 5000


def _check_pair(I, G) -> tuple[np.ndarray, np.ndarray]:
    I, G = linalg.as_matrix(I), linalg.as_matrix(G)
    if I.shape[1] != G.shape[1]:
        raise ShapeError(f"I has {I.shape[1]} samples but G has {G.shape[1]}")
    return I, G


def _check_cap(p: int, cap: int) -> None:
    if p > cap:
        raise CapacityError(f"dense {p}x{p} curvature matrix exceeds the cap of {cap} parameters")


def _require_grads(cache: BatchCache) -> list[np.ndarray]:
    if cache.grads is None:
        raise StateError("cache has no per-sample gradients; run backward first")
    return cache.grads


@dataclass
class FisherBlock:
    """Curvature of one layer, either explicit (p_l x p_l) or as m x m Gram factors."""

    layer_index: int
    representation: str  # "explicit" or "gram"
    beta: float = 0.0
    F: np.ndarray | None = None
    C1: np.ndarray | None = None
    C2: np.ndarray | None = None

    @property
    def m(self) -> int:
        if self.representation == "gram":
            return self.C1.shape[0]
        raise AttributeError("explicit blocks do not carry the batch size")

    def damped(self) -> np.ndarray:
        """``F_l + beta I`` (explicit) or ``(C1 o C2)/m + beta I`` (gram)."""
        if self.representation == "explicit":
            return self.F + self.beta * np.eye(self.F.shape[0])
        m = self.C1.shape[0]
        return self.C1 * self.C2 / m + self.beta * np.eye(m)


def layer_jacobian_explicit(I, G) -> np.ndarray:
    """Per-sample gradients of one layer as rows, m x ((d_i+1) d_o)."""
    I, G = _check_pair(I, G)
    return linalg.khatri_rao_cols(I, G).T


def gram_jacobian(I, G) -> np.ndarray:
    """``J_l J_l^T`` as ``(I^T I) o (G^T G)``; never forms ``J_l``."""
    I, G = _check_pair(I, G)
    return (I.T @ I) * (G.T @ G)


def full_jacobian(cache: BatchCache) -> np.ndarray:
    grads = _require_grads(cache)
    return np.hstack([layer_jacobian_explicit(I, G) for I, G in zip(cache.inputs, grads)])


def full_empirical_fim(cache: BatchCache, cap: int = DENSE_CAP) -> np.ndarray:
    grads = _require_grads(cache)
    p = sum(I.shape[0] * G.shape[0] for I, G in zip(cache.inputs, grads))
    _check_cap(p, cap)
    J = full_jacobian(cache)
    return J.T @ J / cache.m


def block_fim(I, G, layer_index: int = 0, beta: float = 0.0, cap: int = DENSE_CAP) -> FisherBlock:
    I, G = _check_pair(I, G)
    _check_cap(I.shape[0] * G.shape[0], cap)
    J = layer_jacobian_explicit(I, G)
    F = J.T @ J / I.shape[1]
    return FisherBlock(layer_index, "explicit", beta, F=0.5 * (F + F.T))


def gram_block(I, G, layer_index: int = 0, beta: float = 0.0) -> FisherBlock:
    I, G = _check_pair(I, G)
    return FisherBlock(layer_index, "gram", beta, C1=I.T @ I, C2=G.T @ G)


def score(net: NetworkModel, x, y) -> np.ndarray:
    """Gradient of ``log p(y | x, theta)`` for one sample, flattened (p x 1)."""
    x = linalg.as_matrix(x)
    y = linalg.as_matrix(y)
    if x.shape[1] != 1:
        raise ShapeError("score takes a single sample")
    _, cache = forward(net, x)
    return -flatten_grads(backward(net, cache, y))


def output_jacobians(net: NetworkModel, cache: BatchCache) -> np.ndarray:
    """Jacobian of the output-layer preactivations, shape (m, d_out, p)."""
    K, m = cache.preacts[-1].shape
    out = np.empty((m, K, sum(layer.W.size for layer in net.layers)))
    for k in range(K):
        e = np.zeros((K, m))
        e[k] = 1.0
        Gs = backprop(net, cache, e)
        out[:, k, :] = np.hstack(
            [layer_jacobian_explicit(I, G) for I, G in zip(cache.inputs, Gs)]
        )
    return out


def model_fim(net: NetworkModel, cache: BatchCache, cap: int = DENSE_CAP) -> np.ndarray:
    """Fisher under the model's own label distribution, expectation taken analytically.

    Gaussian head: ``mean_i Jf_i^T Jf_i``.  Categorical head:
    ``mean_i Jz_i^T (diag(p_i) - p_i p_i^T) Jz_i`` with logits ``z``.
    """
    p = sum(layer.W.size for layer in net.layers)
    _check_cap(p, cap)
    Jo = output_jacobians(net, cache)
    m = cache.m
    if net.head == "gaussian":
        F = np.einsum("ikp,ikq->pq", Jo, Jo) / m
    else:
        P = cache.predictions
        M = np.einsum("ki,kl->ikl", P, np.eye(P.shape[0])) - np.einsum("ki,li->ikl", P, P)
        F = np.einsum("ikp,ikl,ilq->pq", Jo, M, Jo) / m
    return 0.5 * (F + F.T)
