"""Dense lower-triangular matrices: construction, products, solves, norms.

Row/column indices are 1-based in contracts and docs, 0-based in storage.
All matrices are plain float64 ndarrays; nothing here mutates its inputs.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .kernels import ToeplitzSpec

__all__ = [
    "build_toeplitz",
    "col_max_norm",
    "condition_upper_bound",
    "forward_substitute",
    "frobenius_norm",
    "inv_sqrt_opnorm_bound",
    "matvec",
    "operator_norm",
    "row_max_norm",
    "sqrt_opnorm_bound",
    "toeplitz_from_coeffs",
    "toeplitz_opnorm_bound",
]

_POWER_ITERATION_CAP = 100_000


def build_toeplitz(n: int, coeff: Callable[[int], float]) -> np.ndarray:
    """Dense lower-triangular Toeplitz matrix with entry coeff(i - j) at (i, j)."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    col = np.fromiter((float(coeff(k)) for k in range(n)), dtype=np.float64, count=n)
    return toeplitz_from_coeffs(col)


def toeplitz_from_coeffs(coeffs: Sequence[float] | np.ndarray) -> np.ndarray:
    """Same construction as build_toeplitz from a precomputed coefficient vector."""
    col = np.asarray(coeffs, dtype=np.float64)
    if col.ndim != 1 or col.size == 0:
        raise ValueError("coefficient vector must be 1-d and nonempty")
    return scipy.linalg.toeplitz(col, np.zeros(col.size))


def matvec(m: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Exact dense product M z."""
    m = np.asarray(m, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if m.ndim != 2 or z.ndim != 1 or m.shape[1] != z.shape[0]:
        raise ValueError(f"dimension mismatch: {m.shape} @ {z.shape}")
    return m @ z


def forward_substitute(l: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Solve L X = Y for lower-triangular L by forward substitution."""
    l = np.asarray(l, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if l.ndim != 2 or l.shape[0] != l.shape[1]:
        raise ValueError(f"L must be square, got {l.shape}")
    if y.shape[0] != l.shape[0]:
        raise ValueError(f"dimension mismatch: {l.shape} vs {y.shape}")
    if np.any(np.diagonal(l) == 0.0):
        raise np.linalg.LinAlgError("triangular system is singular: zero diagonal entry")
    return scipy.linalg.solve_triangular(l, y, lower=True)


def frobenius_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(m, dtype=np.float64)))


def row_max_norm(m: np.ndarray) -> float:
    """Largest row l2-norm (the 2->inf operator norm)."""
    m = np.asarray(m, dtype=np.float64)
    return float(np.sqrt((m * m).sum(axis=1).max()))


def col_max_norm(m: np.ndarray) -> float:
    """Largest column l2-norm (the 1->2 operator norm; sensitivity of a right factor)."""
    m = np.asarray(m, dtype=np.float64)
    return float(np.sqrt((m * m).sum(axis=0).max()))


def operator_norm(m: np.ndarray, tol: float = 1e-8) -> float:
    """Largest singular value via power iteration on M^T M.

    Deterministic seeded start vector; stops when the singular-value estimate
    is stable to relative tolerance tol, raises LinAlgError at the iteration
    cap.  A start vector exactly orthogonal to the top singular subspace is
    a measure-zero event and not defended against.
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"matrix must be 2-d, got shape {m.shape}")
    rng = np.random.default_rng(0x5EED)
    v = rng.standard_normal(m.shape[1])
    v /= np.linalg.norm(v)
    prev = -1.0
    for _ in range(_POWER_ITERATION_CAP):
        w = m @ v
        sigma = float(np.linalg.norm(w))
        if sigma == 0.0:
            return 0.0
        if abs(sigma - prev) <= tol * sigma:
            return sigma
        prev = sigma
        v = m.T @ w
        v /= np.linalg.norm(v)
    raise np.linalg.LinAlgError(
        f"power iteration did not converge in {_POWER_ITERATION_CAP} iterations"
    )


def toeplitz_opnorm_bound(coeffs: Sequence[float] | np.ndarray) -> float:
    """Column-sum bound sum_k |q_k| >= operator norm of the triangular Toeplitz matrix."""
    return float(np.abs(np.asarray(coeffs, dtype=np.float64)).sum())


def sqrt_opnorm_bound(spec: ToeplitzSpec) -> float:
    """Upper bound on the operator norm of the square-root factor.

    The smaller of the coefficient column sum and the closed form
    (2 sqrt(n) - 1)/(1 - beta) for alpha = 1, else 1/((1 - beta/alpha)(1 - alpha)).
    """
    column_sum = toeplitz_opnorm_bound(spec.sqrt_coeffs)
    if spec.alpha == 1.0:
        closed = (2.0 * math.sqrt(spec.n) - 1.0) / (1.0 - spec.beta)
    else:
        closed = 1.0 / ((1.0 - spec.beta / spec.alpha) * (1.0 - spec.alpha))
    return min(column_sum, closed)


def inv_sqrt_opnorm_bound(spec: ToeplitzSpec) -> float:
    """Upper bound on the operator norm of the inverse square-root factor."""
    return toeplitz_opnorm_bound(spec.inv_sqrt_coeffs)


def condition_upper_bound(spec: ToeplitzSpec) -> float:
    """Computable upper bound on the condition number of the square-root factor."""
    if spec.n <= 1:
        raise ValueError("condition bound needs n > 1")
    return sqrt_opnorm_bound(spec) * inv_sqrt_opnorm_bound(spec)
