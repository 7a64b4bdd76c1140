"""Dense linear algebra helpers.

Matrices are plain 2-D ``float64`` numpy arrays. Vectorization is row-major
throughout, so ``vec(u v^T) == kron(u, v)`` and ``W.reshape(-1)`` is the
canonical flattening of a weight matrix.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import ShapeError, SingularMatrixError

JITTER_RETRIES = 3
JITTER_SCALE = 1e-10


def as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got ndim={a.ndim}")
    return a


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dimensions differ: {a.shape} @ {b.shape}")
    return a @ b


def hadamard(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise ShapeError(f"hadamard needs equal shapes, got {a.shape} and {b.shape}")
    return a * b


def kron(u, v) -> np.ndarray:
    """Kronecker product of two column vectors; entry ``i*q + j`` is ``u[i]*v[j]``."""
    u, v = as_matrix(u), as_matrix(v)
    if u.shape[1] != 1 or v.shape[1] != 1:
        raise ShapeError("kron expects column vectors")
    return np.kron(u, v)


def khatri_rao_cols(a, b) -> np.ndarray:
    """Column-wise Khatri-Rao product: column j is ``kron(a[:, j], b[:, j])``."""
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[1]:
        raise ShapeError(f"column counts differ: {a.shape[1]} vs {b.shape[1]}")
    return scipy.linalg.khatri_rao(a, b)


def _check_square(s: np.ndarray) -> None:
    if s.shape[0] != s.shape[1]:
        raise ShapeError(f"expected a square matrix, got {s.shape}")


def cho_factor_jittered(s) -> tuple:
    """Cholesky-factor ``s``, adding diagonal jitter on failure.

    Jitter is ``1e-10 * trace(s) / n`` and is retried up to three times
    (cumulatively); after that :class:`SingularMatrixError` is raised.
    """
    s = as_matrix(s)
    _check_square(s)
    n = s.shape[0]
    jitter = JITTER_SCALE * max(np.trace(s), 0.0) / n
    if jitter == 0.0:
        jitter = JITTER_SCALE
    work = s
    for attempt in range(JITTER_RETRIES + 1):
        try:
            return scipy.linalg.cho_factor(work, lower=True, check_finite=True)
        except np.linalg.LinAlgError:
            if attempt == JITTER_RETRIES:
                break
            work = work + jitter * np.eye(n)
    raise SingularMatrixError(
        f"Cholesky factorization failed after {JITTER_RETRIES} jitter retries (n={n})"
    )


def cholesky_solve(s, b) -> np.ndarray:
    """Solve ``s @ x = b`` for symmetric positive definite ``s``."""
    s, b = as_matrix(s), as_matrix(b)
    if s.shape[0] != b.shape[0]:
        raise ShapeError(f"system {s.shape} incompatible with rhs {b.shape}")
    factor = cho_factor_jittered(s)
    return scipy.linalg.cho_solve(factor, b)


def spd_inverse(s, max_condition: float = 1e14) -> np.ndarray:
    """Explicit inverse of an SPD matrix via its Cholesky factor."""
    s = as_matrix(s)
    _check_square(s)
    try:
        factor = scipy.linalg.cho_factor(s, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(
            f"matrix is not positive definite (condition estimate {np.linalg.cond(s):.3e})"
        ) from exc
    diag = np.diag(factor[0])
    cond_est = (diag.max() / diag.min()) ** 2
    if not np.isfinite(cond_est) or cond_est > max_condition:
        raise SingularMatrixError(f"matrix is near-singular (condition estimate {cond_est:.3e})")
    inv = scipy.linalg.cho_solve(factor, np.eye(s.shape[0]))
    return 0.5 * (inv + inv.T)
