"""Factorization assembly, exact error metrics, and parameter selection.

Error model: writing the query matrix as A = L R, privatizing R x + z with
i.i.d. Gaussian z and releasing L (R x + z) makes the per-step output
variance the squared row norm of L times the squared sensitivity (max column
l2-norm) of R, up to the privacy constant.  mean_se and max_se below are the
average and worst per-step variance with that constant normalized to 1;
every comparison reported anywhere in the package is a ratio in which the
constant cancels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .binning import Binning, BinningParams, collect_binning
from .kernels import ToeplitzSpec
from .matrix import (
    col_max_norm,
    forward_substitute,
    frobenius_norm,
    row_max_norm,
    toeplitz_from_coeffs,
)
from .streaming import BinnedMatrixView, materialize, toeplitz_row_source

__all__ = [
    "FactorizationReport",
    "assemble_report",
    "binary_tree_factorization",
    "binned_square_root",
    "build_report",
    "error_ratios",
    "max_se",
    "mean_se",
    "params_for_blowup",
    "right_factor",
    "square_root_error_baseline",
    "verify_perturbation",
]


@dataclass(frozen=True)
class FactorizationReport:
    """Norms, sensitivity, and error ratios of one factorization instance.

    c and tau are None for baseline factorizations that involve no binning.
    Ratios compare against the exact (unbinned) square-root factorization of
    the same counting matrix.
    """

    n: int
    alpha: float
    beta: float
    c: float | None
    tau: float | None
    bin_size: int
    frobenius_l: float
    row_max_l: float
    sensitivity: float
    mean_se: float
    max_se: float
    mean_se_ratio: float
    max_se_ratio: float


def mean_se(l: np.ndarray, r: np.ndarray) -> float:
    """Average per-step output variance, privacy constant normalized to 1."""
    l = np.asarray(l, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if l.ndim != 2 or r.ndim != 2 or l.shape[1] != r.shape[0]:
        raise ValueError(f"factor shapes do not compose: {l.shape} @ {r.shape}")
    return frobenius_norm(l) ** 2 * col_max_norm(r) ** 2 / l.shape[0]


def max_se(l: np.ndarray, r: np.ndarray) -> float:
    """Worst per-step output variance, privacy constant normalized to 1."""
    l = np.asarray(l, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if l.ndim != 2 or r.ndim != 2 or l.shape[1] != r.shape[0]:
        raise ValueError(f"factor shapes do not compose: {l.shape} @ {r.shape}")
    return row_max_norm(l) ** 2 * col_max_norm(r) ** 2


def error_ratios(
    candidate: tuple[np.ndarray, np.ndarray],
    baseline: tuple[np.ndarray, np.ndarray],
) -> tuple[float, float]:
    """(mean, max) error of the candidate factorization relative to the baseline."""
    base_mean = mean_se(*baseline)
    base_max = max_se(*baseline)
    if base_mean == 0.0 or base_max == 0.0:
        raise ValueError("baseline factorization has zero error")
    return mean_se(*candidate) / base_mean, max_se(*candidate) / base_max


def right_factor(lhat: np.ndarray, product: np.ndarray) -> np.ndarray:
    """The factor completing lhat to the target product: solve lhat X = product."""
    return forward_substitute(lhat, product)


def verify_perturbation(
    base: np.ndarray,
    approx: np.ndarray,
    rel_slack: float,
    abs_slack: float,
) -> bool:
    """True iff |approx - base| <= rel_slack * |base| + abs_slack entrywise."""
    base = np.asarray(base, dtype=np.float64)
    approx = np.asarray(approx, dtype=np.float64)
    if base.shape != approx.shape:
        raise ValueError(f"shape mismatch: {base.shape} vs {approx.shape}")
    if rel_slack < 0.0 or abs_slack < 0.0:
        raise ValueError("slack terms must be nonnegative")
    return bool((np.abs(approx - base) <= rel_slack * np.abs(base) + abs_slack).all())


def params_for_blowup(
    xi: float,
    kappa_bound: float,
    opnorm_bound: float,
    n: int,
) -> BinningParams:
    """Binning parameters whose guarantee caps the error blow-up at 1 + xi.

    kappa_bound must upper-bound the condition number of the left factor and
    opnorm_bound its operator norm; conservative bounds only tighten the
    result (c closer to 1, smaller tau), never weaken the guarantee.  The
    xi -> 0 limit is c -> 1 and tau -> 0, i.e. the trivial binning and an
    exact factorization.
    """
    if not 0.0 < xi <= 24.0:
        raise ValueError(f"xi must be in (0, 24], got {xi}")
    if kappa_bound < 1.0:
        raise ValueError(f"a condition-number bound below 1 is impossible, got {kappa_bound}")
    if opnorm_bound <= 0.0:
        raise ValueError(f"opnorm_bound must be positive, got {opnorm_bound}")
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    c = math.exp(-xi / (576.0 * kappa_bound))
    tau = xi * opnorm_bound / (144.0 * n * kappa_bound)
    return BinningParams(c=c, tau=tau)


def binary_tree_factorization(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Classic dyadic-block factorization of the all-ones prefix-sum matrix.

    The right factor's rows are indicators of the complete power-of-two
    blocks inside [1, n], level by level; the left factor's row t selects the
    canonical left-to-right dyadic decomposition of [1, t].  The product is
    exactly the all-ones lower triangle, and streaming the left factor needs
    one buffer cell per level (bit_length(n) cells).
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    blocks: list[tuple[int, int]] = []
    index: dict[tuple[int, int], int] = {}
    size = 1
    while size <= n:
        for q in range(n // size):
            index[(q * size + 1, size)] = len(blocks)
            blocks.append((q * size + 1, size))
        size *= 2
    r = np.zeros((len(blocks), n))
    for row_idx, (start, width) in enumerate(blocks):
        r[row_idx, start - 1 : start - 1 + width] = 1.0
    l = np.zeros((n, len(blocks)))
    for t in range(1, n + 1):
        pos = 0
        while pos < t:
            fit = 1 << ((t - pos).bit_length() - 1)
            width = fit if pos == 0 else min(pos & -pos, fit)
            l[t - 1, index[(pos + 1, width)]] = 1.0
            pos += width
    return l, r


def binary_tree_norms(n: int) -> tuple[float, float, float]:
    """(frobenius**2, max-row**2, sensitivity**2) of the dyadic factorization.

    Pure counting: row t of the left factor has one entry per block of the
    canonical decomposition of [1, t]; column j of the right factor has one
    entry per level whose block around j is complete inside [1, n].  This
    avoids materializing the O(n log n)-sized dense factors at large n and
    agrees with binary_tree_factorization exactly.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    frob_sq = 0
    rowmax_sq = 0
    for t in range(1, n + 1):
        pos, count = 0, 0
        while pos < t:
            fit = 1 << ((t - pos).bit_length() - 1)
            width = fit if pos == 0 else min(pos & -pos, fit)
            pos += width
            count += 1
        frob_sq += count
        rowmax_sq = max(rowmax_sq, count)
    sens_sq = 0
    for j in range(1, n + 1):
        levels, size = 0, 1
        while size <= n:
            start = (j - 1) // size * size + 1
            if start + size - 1 <= n:
                levels += 1
            size *= 2
        sens_sq = max(sens_sq, levels)
    return float(frob_sq), float(rowmax_sq), float(sens_sq)


def square_root_error_baseline(spec: ToeplitzSpec) -> tuple[float, float]:
    """Exact (mean_se, max_se) of the unbinned square-root factorization.

    Both factors are the same Toeplitz matrix, so the norms collapse to
    coefficient sums: frobenius**2 = sum_k (n - k) b_k**2 and the max row
    and max column norms are both sum_k b_k**2.  O(n), no dense matrices.
    """
    b = spec.sqrt_coeffs
    k = np.arange(spec.n)
    col_sq = float((b * b).sum())
    frob_sq = float(((spec.n - k) * b * b).sum())
    return frob_sq * col_sq / spec.n, col_sq * col_sq


def binned_square_root(
    spec: ToeplitzSpec,
    params: BinningParams,
) -> tuple[np.ndarray, np.ndarray, Binning]:
    """(lhat, rhat, binning) approximating the square-root factorization.

    lhat is the binned square-root factor; rhat completes it so that
    lhat @ rhat reconstructs the counting matrix exactly up to the solve.
    """
    source = toeplitz_row_source(spec.sqrt_coeffs)
    binning = collect_binning(source, spec.n, params)
    view = BinnedMatrixView(base=source, binning=binning, n=spec.n)
    lhat = materialize(view)
    rhat = right_factor(lhat, toeplitz_from_coeffs(spec.counting_coeffs))
    return lhat, rhat, binning


def assemble_report(
    spec: ToeplitzSpec,
    params: BinningParams | None,
    lhat: np.ndarray,
    rhat: np.ndarray,
    bin_size: int,
) -> FactorizationReport:
    """Report for an already-built factorization of spec's counting matrix."""
    frob = frobenius_norm(lhat)
    rowmax = row_max_norm(lhat)
    sens = col_max_norm(rhat)
    mean = frob * frob * sens * sens / spec.n
    worst = rowmax * rowmax * sens * sens
    base_mean, base_max = square_root_error_baseline(spec)
    return FactorizationReport(
        n=spec.n,
        alpha=spec.alpha,
        beta=spec.beta,
        c=None if params is None else params.c,
        tau=None if params is None else params.tau,
        bin_size=bin_size,
        frobenius_l=frob,
        row_max_l=rowmax,
        sensitivity=sens,
        mean_se=mean,
        max_se=worst,
        mean_se_ratio=mean / base_mean,
        max_se_ratio=worst / base_max,
    )


def build_report(spec: ToeplitzSpec, params: BinningParams) -> FactorizationReport:
    """Binned square-root factorization of spec's counting matrix, reported."""
    lhat, rhat, binning = binned_square_root(spec, params)
    return assemble_report(spec, params, lhat, rhat, binning.size)
