"""SGD, exact NGD, block-diagonal NGD and TENGraD update rules.

All rules share :class:`OptimConfig`. ``compute_update`` returns per-layer
deltas (already scaled by the learning rate and including weight decay);
the ``*_step`` wrappers subtract them from the network in place.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import fisher, linalg
from .fisher import DENSE_CAP
from .errors import NumericError, SingularMatrixError, StateError
from .model import BatchCache, NetworkModel, apply_update, flatten_grads, unflatten

METHODS = ("sgd", "exact_ngd", "block_ngd", "tengrad")
BYTES_PER_SCALAR = 8


@dataclass
class OptimConfig:
    alpha: float = 1e-2
    beta: float = 1e-2
    lr_decay: float = 1.0
    weight_decay: float = 0.0
    method: str = "tengrad"
    # "empirical" uses training labels; "model" takes the expectation over the
    # model's own label distribution (exact_ngd / block_ngd only).
    fisher: str = "empirical"
    dense_cap: int = DENSE_CAP

    def __post_init__(self):
        self.method = self.method.replace("-", "_")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.beta < 0 or (self.method != "sgd" and self.beta <= 0):
            raise ValueError("beta must be > 0 for natural-gradient methods")
        if not 0 < self.lr_decay <= 1:
            raise ValueError("lr_decay must lie in (0, 1]")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be nonnegative")
        if self.fisher not in ("empirical", "model"):
            raise ValueError(f"unknown fisher estimate {self.fisher!r}")
        if self.fisher == "model" and self.method == "tengrad":
            raise ValueError("tengrad uses the empirical Fisher only")


def lr_schedule(cfg: OptimConfig, epoch: int) -> float:
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    return cfg.alpha * cfg.lr_decay**epoch


def _finish(net, directions, cfg, alpha) -> list[np.ndarray]:
    deltas = [alpha * (d + cfg.weight_decay * layer.W) for d, layer in zip(directions, net.layers)]
    if not all(np.all(np.isfinite(d)) for d in deltas):
        raise NumericError("non-finite parameter update")
    return deltas


def _require_grads(cache: BatchCache | None) -> list[np.ndarray]:
    if cache is None or cache.grads is None:
        raise StateError("natural-gradient steps need a cache filled by backward")
    return cache.grads


def sgd_update(net, gradients, cfg, alpha=None):
    alpha = cfg.alpha if alpha is None else alpha
    return _finish(net, [np.asarray(g) for g in gradients], cfg, alpha)


def exact_ngd_update(net, gradients, cache, cfg, alpha=None):
    alpha = cfg.alpha if alpha is None else alpha
    _require_grads(cache)
    if cfg.fisher == "model":
        F = fisher.model_fim(net, cache, cap=cfg.dense_cap)
    else:
        F = fisher.full_empirical_fim(cache, cap=cfg.dense_cap)
    F_inv = linalg.spd_inverse(F + cfg.beta * np.eye(F.shape[0]))
    delta = F_inv @ flatten_grads(gradients)
    return _finish(net, unflatten(delta, net), cfg, alpha)


def block_ngd_update(net, gradients, cache, cfg, alpha=None):
    alpha = cfg.alpha if alpha is None else alpha
    Gs = _require_grads(cache)
    if cfg.fisher == "model":
        F = fisher.model_fim(net, cache, cap=cfg.dense_cap)
        bounds = np.cumsum([0] + [layer.W.size for layer in net.layers])
        blocks = [F[a:b, a:b] for a, b in zip(bounds[:-1], bounds[1:])]
    else:
        blocks = [
            fisher.block_fim(I, G, l, cfg.beta, cap=cfg.dense_cap).F
            for l, (I, G) in enumerate(zip(cache.inputs, Gs))
        ]
    directions = []
    for l, (Fl, g) in enumerate(zip(blocks, gradients)):
        try:
            sol = linalg.cholesky_solve(Fl + cfg.beta * np.eye(Fl.shape[0]), np.asarray(g).reshape(-1, 1))
        except SingularMatrixError as exc:
            raise SingularMatrixError(f"layer {l}: {exc}") from exc
        directions.append(sol.reshape(np.shape(g)))
    return _finish(net, directions, cfg, alpha)


def tengrad_direction(I: np.ndarray, G: np.ndarray, g_mean: np.ndarray, beta: float) -> np.ndarray:
    """``(F_l + beta I)^{-1} g`` for one layer through an m x m solve.

    ``I`` and ``G`` are the cached layer input and per-sample preactivation
    derivatives, ``g_mean`` the batch-mean gradient ``I G^T / m``.
    """
    m = I.shape[1]
    S = fisher.gram_jacobian(I, G) / m + beta * np.eye(m)
    # b = J_l vec(g): entry i is I[:, i]^T g G[:, i]
    b = np.sum((g_mean.T @ I) * G, axis=0)
    v = linalg.cholesky_solve(S, b[:, None])[:, 0]
    # U = J_l^T v without forming J_l
    U = I @ (v[:, None] * G.T)
    return (g_mean - U / m) / beta


def tengrad_update(net, gradients, cache, cfg, alpha=None):
    alpha = cfg.alpha if alpha is None else alpha
    Gs = _require_grads(cache)
    directions = []
    for l, (I, G, g) in enumerate(zip(cache.inputs, Gs, gradients)):
        try:
            directions.append(tengrad_direction(I, G, np.asarray(g), cfg.beta))
        except SingularMatrixError as exc:
            raise SingularMatrixError(f"layer {l}: {exc}") from exc
    return _finish(net, directions, cfg, alpha)


def compute_update(net, gradients, cache, cfg, alpha=None) -> list[np.ndarray]:
    if cfg.method == "sgd":
        return sgd_update(net, gradients, cfg, alpha)
    if cfg.method == "exact_ngd":
        return exact_ngd_update(net, gradients, cache, cfg, alpha)
    if cfg.method == "block_ngd":
        return block_ngd_update(net, gradients, cache, cfg, alpha)
    return tengrad_update(net, gradients, cache, cfg, alpha)


def sgd_step(net: NetworkModel, gradients: Sequence[np.ndarray], cfg: OptimConfig, alpha=None) -> None:
    apply_update(net, sgd_update(net, gradients, cfg, alpha))


def exact_ngd_step(net, gradients, cache, cfg, alpha=None) -> None:
    apply_update(net, exact_ngd_update(net, gradients, cache, cfg, alpha))


def block_ngd_step(net, gradients, cache, cfg, alpha=None) -> None:
    apply_update(net, block_ngd_update(net, gradients, cache, cfg, alpha))


def tengrad_step(net, gradients, cache, cfg, alpha=None) -> None:
    apply_update(net, tengrad_update(net, gradients, cache, cfg, alpha))


def step(net, gradients, cache, cfg, alpha=None) -> None:
    apply_update(net, compute_update(net, gradients, cache, cfg, alpha))


def optimizer_bytes(net: NetworkModel, m: int, method: str) -> int:
    """Bytes of optimizer working set, counting every stored float64.

    sgd: gradient buffer. exact_ngd: F, its inverse, J and two p-vectors.
    block_ngd: the same per layer. tengrad: C1, C2, S, b, v and a gradient
    plus update buffer per layer; no p_l x p_l storage.
    """
    method = method.replace("-", "_")
    sizes = [layer.W.size for layer in net.layers]
    p = sum(sizes)
    if method == "sgd":
        count = p
    elif method == "exact_ngd":
        count = 2 * p * p + m * p + 2 * p
    elif method == "block_ngd":
        count = sum(2 * q * q + m * q + 2 * q for q in sizes)
    elif method == "tengrad":
        count = sum(3 * m * m + 2 * m + 2 * q for q in sizes)
    else:
        raise ValueError(f"unknown method {method!r}")
    return BYTES_PER_SCALAR * count
