"""Coefficient kernels for the decayed counting matrix family and its square root.

The lower-triangular counting matrix with weight decay ``alpha`` and momentum
``beta`` (0 <= beta < alpha <= 1; alpha = 1, beta = 0 is the plain prefix-sum
matrix) is Toeplitz with subdiagonals

    a_k = (alpha**(k+1) - beta**(k+1)) / (alpha - beta).

Its principal square root is again lower-triangular Toeplitz, with

    b_j = sum_{i=0..j} alpha**(j-i) * g(j-i) * g(i) * beta**i,

and the inverse of that square root has subdiagonals

    s_k = alpha**k * sum_{i=0..k} (beta/alpha)**i * dg(i) * dg(k-i),

where g(k) = binom(2k, k) / 4**k is the normalized central binomial
coefficient (the Taylor coefficients of 1/sqrt(1-x)) and dg(k) = g(k) - g(k-1)
its consecutive difference (the coefficients of sqrt(1-x)).  Everything is
float64; full coefficient prefixes are computed once per spec and cached.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

__all__ = [
    "ToeplitzSpec",
    "central_binomial",
    "central_binomial_diff",
    "central_binomial_diff_prefix",
    "central_binomial_prefix",
    "counting_coeff",
    "inv_sqrt_coeff",
    "sqrt_coeff",
]


def central_binomial(k: int) -> float:
    """Return binom(2k, k) / 4**k.

    Evaluated by the multiplicative recurrence g(k) = g(k-1) * (2k-1) / (2k),
    which stays in float range where the factorial form overflows (k ~ 500).
    For k >= 1 the value lies in [1/(2 sqrt(k)), 1/sqrt(pi k)].
    """
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    out = 1.0
    for m in range(1, k + 1):
        out *= (2 * m - 1) / (2 * m)
    return out


def central_binomial_prefix(n: int) -> np.ndarray:
    """Return the first n values [g(0), ..., g(n-1)] as one cumulative product."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    factors = np.ones(n)
    if n > 1:
        k = np.arange(1, n, dtype=np.float64)
        factors[1:] = (2.0 * k - 1.0) / (2.0 * k)
    return np.cumprod(factors)


def central_binomial_diff(k: int) -> float:
    """Return g(k) - g(k-1), with the k = 0 case defined as 1.

    Uses the identity g(k) - g(k-1) = -g(k) / (2k - 1): the direct difference
    of two nearly equal tail values would lose most of its relative accuracy.
    Negative for k >= 1, within [-1/(sqrt(pi k)(2k-1)), -1/(2 sqrt(k)(2k-1))].
    """
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    if k == 0:
        return 1.0
    return -central_binomial(k) / (2 * k - 1)


def central_binomial_diff_prefix(n: int) -> np.ndarray:
    """Return the first n values [dg(0), ..., dg(n-1)]."""
    g = central_binomial_prefix(n)
    out = np.empty(n)
    out[0] = 1.0
    if n > 1:
        k = np.arange(1, n, dtype=np.float64)
        out[1:] = -g[1:] / (2.0 * k - 1.0)
    return out


class ToeplitzSpec:
    """Dimension and decay parameters of one counting-matrix instance.

    Requires 0 <= beta < alpha <= 1 and n >= 1.  alpha = beta is rejected
    rather than patched with the limit formula (k+1) * alpha**k; the family
    is defined on the strict range only.  The three coefficient prefixes are
    computed lazily, cached, and frozen (read-only arrays), so a spec can be
    shared across threads once its caches are populated.
    """

    def __init__(self, alpha: float, beta: float, n: int) -> None:
        alpha = float(alpha)
        beta = float(beta)
        if not 0.0 < alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {alpha}")
        if not 0.0 <= beta < alpha:
            raise ValueError(
                "need 0 <= beta < alpha (momentum strictly below weight decay), "
                f"got alpha={alpha}, beta={beta}"
            )
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
            raise ValueError(f"n must be a positive integer, got {n!r}")
        self.alpha = alpha
        self.beta = beta
        self.n = int(n)

    def __repr__(self) -> str:
        return f"ToeplitzSpec(alpha={self.alpha}, beta={self.beta}, n={self.n})"

    @cached_property
    def counting_coeffs(self) -> np.ndarray:
        """Subdiagonals a_0..a_{n-1} of the counting matrix.

        Evaluated as alpha**k * (1 - r**(k+1)) / (1 - r) with r = beta/alpha,
        which equals (alpha**(k+1) - beta**(k+1)) / (alpha - beta) without the
        subtractive cancellation of the textbook form as beta -> alpha.
        """
        k = np.arange(self.n, dtype=np.float64)
        r = self.beta / self.alpha
        out = self.alpha**k * (1.0 - r ** (k + 1.0)) / (1.0 - r)
        out.flags.writeable = False
        return out

    @cached_property
    def sqrt_coeffs(self) -> np.ndarray:
        """Subdiagonals b_0..b_{n-1} of the square root of the counting matrix.

        The defining sum is the convolution of alpha**j g(j) with
        beta**i g(i); beta = 0 collapses it to alpha**j g(j) directly.
        """
        g = central_binomial_prefix(self.n)
        j = np.arange(self.n, dtype=np.float64)
        u = self.alpha**j * g
        if self.beta == 0.0:
            out = u
        else:
            out = np.convolve(u, self.beta**j * g)[: self.n]
        out.flags.writeable = False
        return out

    @cached_property
    def inv_sqrt_coeffs(self) -> np.ndarray:
        """Subdiagonals s_0..s_{n-1} of the inverse of the square-root factor.

        Same convolution structure as sqrt_coeffs with g replaced by its
        consecutive difference; conv(s, b) is the unit impulse, which is the
        identity B^-1 B = I read off subdiagonal by subdiagonal.
        """
        dg = central_binomial_diff_prefix(self.n)
        k = np.arange(self.n, dtype=np.float64)
        u = self.alpha**k * dg
        if self.beta == 0.0:
            out = u
        else:
            out = np.convolve(u, self.beta**k * dg)[: self.n]
        out.flags.writeable = False
        return out


def _check_offset(name: str, k: int, n: int) -> None:
    if not 0 <= k < n:
        raise ValueError(f"{name} must be in [0, {n}), got {k}")


def counting_coeff(k: int, spec: ToeplitzSpec) -> float:
    """a_k, the k-th subdiagonal of the counting matrix; a_0 = 1 always."""
    _check_offset("k", k, spec.n)
    return float(spec.counting_coeffs[k])


def sqrt_coeff(j: int, spec: ToeplitzSpec) -> float:
    """b_j, the j-th subdiagonal of the square-root factor.

    Positive, nonincreasing in j, and sandwiched between
    alpha**j / (2 sqrt(j+1)) and alpha**j / ((1 - beta/alpha) sqrt(j+1)).
    """
    _check_offset("j", j, spec.n)
    return float(spec.sqrt_coeffs[j])


def inv_sqrt_coeff(k: int, spec: ToeplitzSpec) -> float:
    """s_k, the k-th subdiagonal of the inverse square-root factor."""
    _check_offset("k", k, spec.n)
    return float(spec.inv_sqrt_coeffs[k])
