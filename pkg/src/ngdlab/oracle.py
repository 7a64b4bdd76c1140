"""Independent numerical verifiers for the Fisher / KL / Woodbury identities.

Everything here is brute force on purpose: central finite differences,
Monte Carlo over model-sampled labels, and direct dense inverses. Nothing
in this module calls the optimizer code paths it is used to check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.stats import norm

from . import fisher
from .errors import NumericError
from .model import (
    DenseLayer,
    NetworkModel,
    PROB_FLOOR,
    forward,
    get_params,
    init_network,
    sample_labels,
    set_params,
)

GRAD_EPS = 1e-5
HESS_EPS = 1e-3


@dataclass(frozen=True)
class ToleranceSpec:
    kind: str  # "relative", "absolute" or "statistical"
    value: float
    num_samples: int | None = None
    z_multiplier: float | None = None

    def __post_init__(self):
        if self.value <= 0:
            raise ValueError("tolerance value must be positive")
        if self.kind not in ("relative", "absolute", "statistical"):
            raise ValueError(f"unknown tolerance kind {self.kind!r}")


def bonferroni_z(components: int, base: float = 4.0, family_rate: float = 1e-3) -> float:
    """``base`` standard errors, widened so that ``components`` two-sided tests
    jointly fail with probability at most ``family_rate``."""
    return max(base, float(norm.isf(family_rate / (2 * max(components, 1)))))


@dataclass
class CheckReport:
    name: str
    metric: str
    value: float
    tolerance: float
    passed: bool
    details: dict = field(default_factory=dict)

    def row(self) -> tuple:
        return (self.name, self.metric, self.value, self.tolerance, "pass" if self.passed else "fail")


# --- finite differences -----------------------------------------------------


def _checked(v):
    if not np.all(np.isfinite(v)):
        raise NumericError("objective returned a non-finite value")
    return v


def finite_diff_gradient(f: Callable, theta, eps: float = GRAD_EPS) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    if eps <= 0:
        raise ValueError("eps must be positive")
    grad = np.empty(theta.size)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = eps
        grad[i] = (_checked(f(theta + e)) - _checked(f(theta - e))) / (2 * eps)
    return grad


def _hessian_entries(f: Callable, theta: np.ndarray, eps: float) -> Iterator[tuple[int, int, np.ndarray]]:
    """Yield ``(i, j, H_ij)`` for ``j <= i``; ``f`` may return an array (evaluated elementwise)."""
    n = theta.size
    f0 = _checked(np.asarray(f(theta), dtype=np.float64))
    steps = np.eye(n) * eps
    plus = [_checked(np.asarray(f(theta + steps[i]), dtype=np.float64)) for i in range(n)]
    minus = [_checked(np.asarray(f(theta - steps[i]), dtype=np.float64)) for i in range(n)]
    for i in range(n):
        yield i, i, (plus[i] - 2.0 * f0 + minus[i]) / eps**2
        for j in range(i):
            fpp = f(theta + steps[i] + steps[j])
            fpm = f(theta + steps[i] - steps[j])
            fmp = f(theta - steps[i] + steps[j])
            fmm = f(theta - steps[i] - steps[j])
            yield i, j, _checked(np.asarray(fpp - fpm - fmp + fmm, dtype=np.float64)) / (4 * eps**2)


def finite_diff_hessian(f: Callable, theta, eps: float = HESS_EPS) -> np.ndarray:
    """Central-difference Hessian; exactly symmetric by construction."""
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = theta.size
    H = np.zeros((n, n))
    for i, j, h in _hessian_entries(f, theta, eps):
        H[i, j] = H[j, i] = h
    return 0.5 * (H + H.T)


# --- helpers over networks --------------------------------------------------


def bernoulli_net(logit: float = 0.0) -> NetworkModel:
    """Two-class softmax whose class-1 logit minus class-0 logit equals ``logit``.

    Input is one feature that callers set to 0, so only the biases matter.
    """
    W = np.zeros((2, 2))
    W[1, 1] = logit
    return NetworkModel([DenseLayer(W, "identity")], head="categorical")


def _log_lik_fn(net: NetworkModel, X: np.ndarray, idx: np.ndarray, Y: np.ndarray) -> Callable:
    """theta -> per-sample log-likelihood of labels ``Y`` at inputs ``X[:, idx]``."""
    work = net.copy()

    def f(theta):
        set_params(work, theta)
        pred, _ = forward(work, X)
        pred = pred[:, idx]
        if net.head == "gaussian":
            return -0.5 * np.sum((pred - Y) ** 2, axis=0)
        return np.log(np.maximum(np.sum(pred * Y, axis=0), PROB_FLOOR))

    return f


def _replicate(X: np.ndarray, num_samples: int) -> np.ndarray:
    return np.arange(num_samples) % X.shape[1]


def _scores(net: NetworkModel, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Per-sample score vectors as rows (N x p)."""
    from .model import backward

    work = net.copy()
    _, cache = forward(work, X)
    backward(work, cache, Y)
    return -fisher.full_jacobian(cache)


# --- score / Fisher / Hessian -----------------------------------------------


def mc_score_expectation(net: NetworkModel, X, num_samples: int, seed=0, rng=None):
    """Monte Carlo mean of the score under model-sampled labels, with standard errors."""
    if num_samples < 1000:
        raise ValueError("num_samples must be at least 1000")
    X = np.asarray(X, dtype=np.float64)
    if rng is None:
        rng = np.random.default_rng(seed)
    Xr = X[:, _replicate(X, num_samples)]
    Y = sample_labels(net, Xr, rng=rng)
    S = _scores(net, Xr, Y)
    return S.mean(axis=0), S.std(axis=0, ddof=1) / np.sqrt(num_samples)


def score_mean_check(net, X, num_samples, seed=0, name="score_mean") -> CheckReport:
    mean, se = mc_score_expectation(net, X, num_samples, seed)
    z = bonferroni_z(mean.size)
    excess = np.abs(mean) - z * se
    worst = int(np.argmax(excess))
    return CheckReport(
        name,
        "max |mean|/SE",
        float(np.max(np.abs(mean) / np.where(se > 0, se, np.inf))),
        z,
        bool(np.all(excess <= 0)),
        {"worst_component": worst, "mean": mean, "se": se},
    )


def mc_fim_vs_hessian(
    net: NetworkModel,
    X,
    num_samples: int,
    seed=0,
    eps: float = HESS_EPS,
    se_multiplier: float = 3.0,
    rel_floor: float = 0.02,
    name: str = "fim_vs_hessian",
) -> CheckReport:
    """Compare the score-outer-product Fisher with minus the expected Hessian.

    Both expectations use the same model-sampled labels; the statistic per
    entry is the sample mean of ``s s^T + H`` with its own standard error.
    """
    X = np.asarray(X, dtype=np.float64)
    rng = np.random.default_rng(seed)
    idx = _replicate(X, num_samples)
    Y = sample_labels(net, X[:, idx], rng=rng)
    S = _scores(net, X[:, idx], Y)
    F_hat = S.T @ S / num_samples
    f = _log_lik_fn(net, X, idx, Y)
    p = S.shape[1]
    H_hat = np.zeros((p, p))
    total = np.zeros((p, p))
    se = np.zeros((p, p))
    for i, j, h in _hessian_entries(f, get_params(net), eps):
        t = S[:, i] * S[:, j] + h
        H_hat[i, j] = H_hat[j, i] = h.mean()
        total[i, j] = total[j, i] = t.mean()
        se[i, j] = se[j, i] = t.std(ddof=1) / np.sqrt(num_samples)
    floor = rel_floor * np.max(np.abs(F_hat))
    tol = np.maximum(se_multiplier * se, floor)
    gap = np.abs(total)
    return CheckReport(
        name,
        "max |F+H| - tol",
        float(np.max(gap - tol)),
        0.0,
        bool(np.all(gap <= tol)),
        {"F_hat": F_hat, "H_hat": H_hat, "se": se, "max_abs": float(gap.max()), "floor": floor},
    )


# --- KL divergence ----------------------------------------------------------


def kl_divergence(net_a: NetworkModel, net_b: NetworkModel, X, head: str | None = None) -> float:
    """Mean over the columns of ``X`` of KL(p_a(y|x) || p_b(y|x))."""
    head = head or net_a.head
    pa, _ = forward(net_a, X)
    pb, _ = forward(net_b, X)
    if head == "gaussian":
        return float(0.5 * np.mean(np.sum((pa - pb) ** 2, axis=0)))
    pa = np.maximum(pa, PROB_FLOOR)
    pb = np.maximum(pb, PROB_FLOOR)
    return float(max(np.mean(np.sum(pa * (np.log(pa) - np.log(pb)), axis=0)), 0.0))


def _kl_fn(net: NetworkModel, X) -> Callable:
    other = net.copy()

    def f(theta):
        set_params(other, theta)
        return kl_divergence(net, other, X)

    return f


def kl_hessian_check(net: NetworkModel, X, eps: float = HESS_EPS, tol: float = 1e-4, name="kl_hessian") -> CheckReport:
    """Finite-difference Hessian of theta' -> KL(p_theta || p_theta') at theta' = theta
    versus the analytic model Fisher."""
    X = np.asarray(X, dtype=np.float64)
    H = finite_diff_hessian(_kl_fn(net, X), get_params(net), eps)
    _, cache = forward(net, X)
    F = fisher.model_fim(net, cache)
    scale = np.max(np.abs(F))
    err = float(np.max(np.abs(H - F)) / scale) if scale > 0 else float(np.max(np.abs(H)))
    return CheckReport(name, "max rel err", err, tol, err <= tol, {"hessian": H, "fim": F})


def kl_quadratic_check(
    net: NetworkModel,
    X,
    direction,
    scales: Sequence[float] = (1e-1, 1e-2, 1e-3),
    tol: float = 1e-3,
    seed=0,
    resample: bool = True,
    name: str = "kl_quadratic",
) -> CheckReport:
    """Ratio KL(theta, theta + s t) / (0.5 s^2 t^T F t) for each scale ``s``."""
    X = np.asarray(X, dtype=np.float64)
    _, cache = forward(net, X)
    F = fisher.model_fim(net, cache)
    t = np.asarray(direction, dtype=np.float64).reshape(-1)
    quad = 0.5 * t @ F @ t
    details = {"degenerate": False}
    rng = np.random.default_rng(seed)
    attempts = 0
    while quad <= 1e-14 * max(1.0, float(t @ t)):
        details["degenerate"] = True
        details["notice"] = "direction lies in the Fisher null space"
        if not resample or attempts >= 10:
            kl = kl_divergence(net, net, X)
            details.update(kl=kl, quad=float(quad), direction=t)
            return CheckReport(name, "|ratio-1| at smallest scale", 0.0, tol, True, details)
        t = rng.standard_normal(t.size)
        quad = 0.5 * t @ F @ t
        attempts += 1
    theta = get_params(net)
    f = _kl_fn(net, X)
    ratios = np.array([f(theta + s * t) / (s * s * quad) for s in scales])
    errors = np.abs(ratios - 1.0)
    details.update(ratios=ratios, errors=errors, scales=np.asarray(scales), direction=t)
    return CheckReport(name, "|ratio-1| at smallest scale", float(errors[-1]), tol, bool(errors[-1] <= tol), details)


# --- Woodbury ---------------------------------------------------------------


def woodbury_inverse(J, beta: float) -> np.ndarray:
    """``(J^T J / m + beta I)^{-1}`` assembled from an m x m inverse."""
    J = np.atleast_2d(np.asarray(J, dtype=np.float64))
    m, p = J.shape
    small = np.linalg.inv(J @ J.T / m + beta * np.eye(m))
    return (np.eye(p) - J.T @ small @ J / m) / beta


def woodbury_identity_check(beta: float, J=None, trials: int = 100, seed=0, p_max: int = 30, m_max: int = 10, tol: float = 1e-9, name="woodbury") -> CheckReport:
    if beta <= 0:
        raise ValueError("beta must be positive")
    rng = np.random.default_rng(seed)
    mats = [np.atleast_2d(np.asarray(J, dtype=np.float64))] if J is not None else None
    if mats is None:
        mats = []
        for _ in range(trials):
            p = int(rng.integers(1, p_max + 1))
            m = int(rng.integers(1, m_max + 1))
            mats.append(rng.standard_normal((m, p)))
    worst = 0.0
    for Jk in mats:
        m, p = Jk.shape
        direct = np.linalg.inv(Jk.T @ Jk / m + beta * np.eye(p))
        err = np.max(np.abs(direct - woodbury_inverse(Jk, beta))) / np.max(np.abs(direct))
        worst = max(worst, float(err))
    return CheckReport(name, "max rel err", worst, tol, worst <= tol, {"trials": len(mats)})


# --- the fixed battery ------------------------------------------------------


def _tiny_tanh_net(sizes, head, seed):
    net = init_network(sizes, "tanh", head, seed)
    return net


def run_battery(seed: int = 0) -> list[CheckReport]:
    """The seeded identity battery behind the ``verify`` subcommand."""
    rng = np.random.default_rng(seed)
    x0 = np.zeros((1, 1))
    reports = []

    reports.append(score_mean_check(bernoulli_net(0.0), x0, 100_000, seed + 1, "score_mean_bernoulli"))
    net = _tiny_tanh_net([2, 3, 1], "gaussian", seed + 2)
    reports.append(score_mean_check(net, rng.standard_normal((2, 5)), 100_000, seed + 3, "score_mean_tanh_gaussian"))
    net = _tiny_tanh_net([2, 3, 3], "categorical", seed + 4)
    reports.append(score_mean_check(net, rng.standard_normal((2, 5)), 100_000, seed + 5, "score_mean_tanh_categorical"))

    net = _tiny_tanh_net([3, 4, 1], "gaussian", seed + 6)
    reports.append(mc_fim_vs_hessian(net, rng.standard_normal((3, 4)), 50_000, seed + 7, name="fim_vs_hessian_gaussian"))
    net = _tiny_tanh_net([2, 3, 2], "categorical", seed + 8)
    reports.append(mc_fim_vs_hessian(net, rng.standard_normal((2, 4)), 50_000, seed + 9, name="fim_vs_hessian_categorical"))

    reports.append(kl_hessian_check(bernoulli_net(0.0), x0, name="kl_hessian_bernoulli"))
    net = init_network([1, 3], "identity", "categorical", seed + 10)
    reports.append(kl_hessian_check(net, np.array([[0.7]]), name="kl_hessian_softmax3"))
    net = _tiny_tanh_net([2, 3, 3], "categorical", seed + 11)
    reports.append(kl_hessian_check(net, rng.standard_normal((2, 6)), name="kl_hessian_tanh_softmax"))
    net = init_network([3, 2], "identity", "gaussian", seed + 12)
    reports.append(kl_hessian_check(net, rng.standard_normal((3, 6)), name="kl_hessian_gaussian_linear"))

    t = np.zeros(4)
    t[3] = 1.0
    reports.append(kl_quadratic_check(bernoulli_net(0.0), x0, t, name="kl_quadratic_bernoulli"))
    reports.append(kl_quadratic_check(bernoulli_net(0.8), x0, t, name="kl_quadratic_bernoulli_offset"))

    reports.append(woodbury_identity_check(0.1, trials=100, seed=seed + 13, name="woodbury_beta0.1"))
    reports.append(woodbury_identity_check(1.0, trials=100, seed=seed + 14, name="woodbury_beta1"))
    return reports
