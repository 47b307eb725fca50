"""Invariant suites behind the verify command.

Each check re-derives one contract the library claims (coefficient bounds,
binning validity, perturbation bounds, streaming equivalence) and reports
pass/fail with the measured slack.  Sizes are chosen so the full run stays
comfortably under a minute; the pytest acceptance suite runs the larger
instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binning import (
    Binning,
    BinningParams,
    Interval,
    build_binning,
    collect_binning,
    has_monotone_ratios,
    verify_binning,
)
from .factorization import (
    binned_square_root,
    build_report,
    params_for_blowup,
    verify_perturbation,
)
from .kernels import (
    ToeplitzSpec,
    central_binomial_diff_prefix,
    central_binomial_prefix,
)
from .matrix import (
    col_max_norm,
    condition_upper_bound,
    frobenius_norm,
    operator_norm,
    row_max_norm,
    sqrt_opnorm_bound,
    toeplitz_from_coeffs,
)
from .mechanism import PrivacyParams, gaussian_constant, run_private_counter, step_noise
from .streaming import (
    BinnedMatrixView,
    StreamState,
    approx_entry,
    materialize,
    stream_matvec,
    toeplitz_row_source,
)

__all__ = ["CheckResult", "SUITE_NAMES", "run_suites"]

ALPHA_BETA_GRID = ((1.0, 0.0), (1.0, 0.9), (0.99, 0.0), (0.99, 0.95))


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str


def _result(suite: str, name: str, passed: bool, detail: str) -> CheckResult:
    return CheckResult(suite, name, bool(passed), detail)


def _sqrt_view(spec: ToeplitzSpec, params: BinningParams) -> tuple[BinnedMatrixView, Binning]:
    source = toeplitz_row_source(spec.sqrt_coeffs)
    binning = collect_binning(source, spec.n, params)
    return BinnedMatrixView(base=source, binning=binning, n=spec.n), binning


def _kernels_suite() -> list[CheckResult]:
    out = []
    kmax = 10_000
    k = np.arange(1, kmax + 1, dtype=np.float64)

    g = central_binomial_prefix(kmax + 1)[1:]
    lo, hi = 1.0 / (2.0 * np.sqrt(k)), 1.0 / np.sqrt(np.pi * k)
    ok = (g >= lo - 1e-15).all() and (g <= hi + 1e-15).all()
    slack = min((g - lo).min(), (hi - g).min())
    out.append(_result("kernels", "central-binomial-bounds", ok, f"k<=1e4, min margin {slack:.3e}"))

    dg = central_binomial_diff_prefix(kmax + 1)[1:]
    lo = -1.0 / (np.sqrt(np.pi * k) * (2.0 * k - 1.0))
    hi = -1.0 / (2.0 * np.sqrt(k) * (2.0 * k - 1.0))
    ok = (dg >= lo - 1e-15).all() and (dg <= hi + 1e-15).all()
    slack = min((dg - lo).min(), (hi - dg).min())
    out.append(_result("kernels", "difference-kernel-bounds", ok, f"k<=1e4, min margin {slack:.3e}"))

    ok = True
    worst = np.inf
    for alpha, beta in ALPHA_BETA_GRID:
        spec = ToeplitzSpec(alpha, beta, kmax + 1)
        b = spec.sqrt_coeffs
        j = np.arange(kmax + 1, dtype=np.float64)
        lo = alpha**j / (2.0 * np.sqrt(j + 1.0))
        hi = alpha**j / ((1.0 - beta / alpha) * np.sqrt(j + 1.0))
        ok &= bool((b >= lo * (1.0 - 1e-12)).all() and (b <= hi * (1.0 + 1e-12)).all())
        ok &= bool((np.diff(b) <= 1e-15).all())
        worst = min(worst, float((hi - b).min()), float((b - lo).min()))
    out.append(_result("kernels", "sqrt-coefficient-bounds", ok, f"grid j<=1e4, min margin {worst:.3e}"))

    worst = 0.0
    for alpha, beta in ALPHA_BETA_GRID:
        spec = ToeplitzSpec(alpha, beta, 256)
        conv = np.convolve(spec.inv_sqrt_coeffs, spec.sqrt_coeffs)[:256]
        impulse = np.zeros(256)
        impulse[0] = 1.0
        worst = max(worst, float(np.abs(conv - impulse).max()))
    out.append(_result("kernels", "inverse-impulse-identity", worst <= 1e-10, f"k<256, max dev {worst:.3e}"))

    worst = 0.0
    for alpha, beta in ALPHA_BETA_GRID:
        spec = ToeplitzSpec(alpha, beta, 256)
        b = toeplitz_from_coeffs(spec.sqrt_coeffs)
        a = toeplitz_from_coeffs(spec.counting_coeffs)
        worst = max(worst, float(np.abs(b @ b - a).max()))
    out.append(_result("kernels", "square-root-identity", worst <= 1e-9, f"n=256 grid, max dev {worst:.3e}"))
    return out


def _binning_suite() -> list[CheckResult]:
    out = []

    spec3 = ToeplitzSpec(1.0, 0.0, 3)
    got = collect_binning(toeplitz_row_source(spec3.sqrt_coeffs), 3, BinningParams(0.5, 0.01))
    trivial = tuple(tuple(Interval(j, j) for j in range(1, i + 1)) for i in range(1, 4))
    ok = got.partitions == trivial
    out.append(_result("binning", "hand-trace-all-trivial", ok, "n=3, c=0.5: ratio ties must not merge"))

    spec5 = ToeplitzSpec(1.0, 0.0, 5)
    got = collect_binning(toeplitz_row_source(spec5.sqrt_coeffs), 5, BinningParams(0.75, 0.01))
    want = (Interval(1, 2), Interval(3, 3), Interval(4, 4), Interval(5, 5))
    ok = got.partitions[4] == want and got.size == 4
    out.append(_result("binning", "hand-trace-merge-run", ok, f"n=5 row-5 partition {got.partitions[4]}"))

    spec50 = ToeplitzSpec(1.0, 0.0, 50)
    got = collect_binning(toeplitz_row_source(spec50.sqrt_coeffs), 50, BinningParams(0.75, 0.02))
    out.append(_result("binning", "reference-bin-size", got.size == 8, f"n=50 size {got.size}, want 8"))

    ok = True
    for alpha, beta in ALPHA_BETA_GRID:
        spec = ToeplitzSpec(alpha, beta, 256)
        for c in (0.75, 0.9):
            b = collect_binning(toeplitz_row_source(spec.sqrt_coeffs), 256, BinningParams(c, 1.0 / 256))
            ok &= verify_binning(b)
    rng = np.random.default_rng(7)
    for _ in range(30):
        rows = rng.uniform(0.05, 1.0, size=(40, 40))
        params = BinningParams(float(rng.uniform(0.2, 0.95)), float(rng.uniform(0.01, 0.5)))
        b = collect_binning(lambda i, j: float(rows[i - 1, j - 1]), 40, params)
        ok &= verify_binning(b)
    out.append(_result("binning", "output-always-valid", ok, "grid + 30 random positive matrices"))

    ok = has_monotone_ratios(toeplitz_from_coeffs(ToeplitzSpec(1.0, 0.0, 64).sqrt_coeffs))
    ok &= has_monotone_ratios(toeplitz_from_coeffs(ToeplitzSpec(0.99, 0.95, 64).sqrt_coeffs))
    ok &= not has_monotone_ratios(np.eye(3))
    out.append(_result("binning", "monotone-ratio-structure", ok, "sqrt factors yes, identity no"))

    ok = True
    worst = np.inf
    for c in (0.5, 0.75, 0.9):
        params = BinningParams(c, 1.0 / 256)
        spec = ToeplitzSpec(1.0, 0.0, 256)
        b = spec.sqrt_coeffs
        for i, part in enumerate(build_binning(toeplitz_row_source(b), 256, params), start=1):
            for iv in part:
                if iv.b >= i or b[i - iv.b] <= params.tau:
                    continue
                ratio = b[i - iv.a] / b[i - iv.b]
                worst = min(worst, ratio - c * c)
                ok &= ratio >= c * c
    out.append(_result("binning", "interval-ratio-floor", ok, f"min(ratio - c^2) = {worst:.3e}"))

    ok = True
    # size lemma: adjacent kept intervals cannot both have boundary ratio
    # above c (they would have merged), so at least half the non-tail
    # boundaries drop the row value by a factor c, and values sit in
    # (tau, 1]; hence size <= 2 log(1/tau)/log(1/c) + 4
    ok = True
    worst = -np.inf
    for alpha, beta in ALPHA_BETA_GRID:
        spec = ToeplitzSpec(alpha, beta, 1024)
        source = toeplitz_row_source(spec.sqrt_coeffs)
        for c in (0.5, 0.75, 0.9):
            for tau in (0.25, 0.02, 0.0009765625):
                size = collect_binning(source, 1024, BinningParams(c, tau)).size
                cap = 2.0 * np.log(1.0 / tau) / np.log(1.0 / c) + 4.0
                ok &= size <= cap
                worst = max(worst, size / cap)
    out.append(_result("binning", "size-lemma-bound", ok,
                       f"grid c x tau x (alpha,beta), worst size/cap {worst:.3f}"))

    spec = ToeplitzSpec(1.0, 0.0, 512)
    source = toeplitz_row_source(spec.sqrt_coeffs)
    params = BinningParams(0.9, 1.0 / 512)
    peak_row = max(len(p) for p in build_binning(source, 512, params))
    final = collect_binning(source, 512, params).size
    out.append(_result("binning", "row-count-within-size", peak_row <= final,
                       f"peak row count {peak_row} vs size {final}"))
    return out


def _perturbation_suite() -> list[CheckResult]:
    out = []

    ok = True
    for n in (64, 256):
        for alpha, beta in ALPHA_BETA_GRID:
            spec = ToeplitzSpec(alpha, beta, n)
            base = toeplitz_from_coeffs(spec.sqrt_coeffs)
            for d in (1.5, 2.0, 4.0, 8.0, 16.0):
                params = BinningParams(1.0 - 1.0 / d, 1.0 / n)
                lhat, _, _ = binned_square_root(spec, params)
                eta = 1.0 / (params.c * params.c) - 1.0
                ok &= verify_perturbation(base, lhat, eta, params.tau)
    out.append(_result("perturbation", "entrywise-bound-on-grid", ok, "n in {64,256}, d in {1.5..16}, full alpha/beta grid"))

    spec = ToeplitzSpec(1.0, 0.0, 128)
    base = toeplitz_from_coeffs(spec.sqrt_coeffs)
    ok = True
    details = []
    for d in (2.0, 8.0):
        params = BinningParams(1.0 - 1.0 / d, 1.0 / 128)
        lhat, rhat, _ = binned_square_root(spec, params)
        eta, mu = 1.0 / (params.c * params.c) - 1.0, params.tau
        p = lhat - base
        ok &= frobenius_norm(lhat) <= (1 + eta) * frobenius_norm(base) + mu * 128
        ok &= row_max_norm(lhat) <= (1 + eta) * row_max_norm(base) + mu * np.sqrt(128)
        p_norm = operator_norm(p) if np.abs(p).max() > 0 else 0.0
        bound = eta * operator_norm(base) + mu * 128
        ok &= p_norm <= bound
        inv_norm = operator_norm(toeplitz_from_coeffs(spec.inv_sqrt_coeffs))
        if inv_norm * p_norm <= 0.5:
            ok &= col_max_norm(rhat) <= (1 + 2 * p_norm * inv_norm) * col_max_norm(base)
            details.append(f"d={d}: sensitivity bound engaged")
        else:
            details.append(f"d={d}: |L^-1||P| > 1/2, sensitivity bound vacuous")
    out.append(_result("perturbation", "norm-lemmas", ok, "; ".join(details)))

    worst = 0.0
    for alpha, beta in ALPHA_BETA_GRID:
        spec = ToeplitzSpec(alpha, beta, 512)
        lhat, rhat, _ = binned_square_root(spec, BinningParams(0.9, 1.0 / 512))
        a = toeplitz_from_coeffs(spec.counting_coeffs)
        worst = max(worst, float(np.abs(lhat @ rhat - a).max()))
    out.append(_result("perturbation", "reconstruction-residual", worst <= 1e-8 * 512, f"n=512 grid, max residual {worst:.3e}"))

    spec = ToeplitzSpec(1.0, 0.0, 128)
    params = params_for_blowup(0.5, condition_upper_bound(spec), sqrt_opnorm_bound(spec), 128)
    rep = build_report(spec, params)
    ok = rep.mean_se_ratio <= 1.5 and rep.max_se_ratio <= 1.5
    out.append(_result("perturbation", "blowup-budget-end-to-end", ok,
                       f"xi=0.5: ratios ({rep.mean_se_ratio:.4f}, {rep.max_se_ratio:.4f}) <= 1.5"))

    rep = build_report(ToeplitzSpec(1.0, 0.0, 50), BinningParams(0.75, 0.02))
    ok = (rep.bin_size == 8
          and abs(rep.mean_se_ratio - 0.9965) <= 5e-4
          and abs(rep.max_se_ratio - 0.9951) <= 5e-4)
    out.append(_result("perturbation", "reference-error-ratios", ok,
                       f"n=50: size {rep.bin_size}, ratios ({rep.mean_se_ratio:.5f}, {rep.max_se_ratio:.5f})"))
    return out


def _streaming_suite() -> list[CheckResult]:
    out = []
    spec = ToeplitzSpec(1.0, 0.0, 256)
    view, binning = _sqrt_view(spec, BinningParams(0.9, 1.0 / 256))
    dense = materialize(view)
    rng = np.random.default_rng(11)
    worst = 0.0
    state = StreamState()
    for _ in range(5):
        z = rng.standard_normal(256)
        state = StreamState()
        streamed = stream_matvec(view, z, state)
        ref = dense @ z
        worst = max(worst, float(np.abs(streamed - ref).max() / np.abs(ref).max()))
    ok = worst <= 1e-10 and state.peak == binning.size
    out.append(_result("streaming", "dense-equivalence", ok,
                       f"rel dev {worst:.3e}; peak {state.peak} == size {binning.size}"))

    spec = ToeplitzSpec(1.0, 0.9, 64)
    view, _ = _sqrt_view(spec, BinningParams(0.8, 0.02))
    dense = materialize(view)
    ok = all(approx_entry(view, i, i) == view.base(i, i) for i in range(1, 65))
    for i in range(1, 65):
        for iv in view.binning.partitions[i - 1]:
            vals = dense[i - 1, iv.a - 1 : iv.b]
            ok &= bool((vals == dense[i - 1, iv.a - 1]).all())
    out.append(_result("streaming", "diagonal-and-constancy", ok, "n=64 decayed instance"))

    spec = ToeplitzSpec(1.0, 0.0, 64)
    view, binning = _sqrt_view(spec, BinningParams(0.75, 1.0 / 64))
    privacy = PrivacyParams(0.5, 1e-6, 123)
    stream = [1.0, 0.0] * 32
    exact = run_private_counter(stream, view, 0.0, privacy)
    ok = all(o.noisy_prefix == o.true_prefix for o in exact)
    out.append(_result("streaming", "zero-sensitivity-hook", ok, "noisy == true on alternating stream"))

    one = run_private_counter(stream, view, 1.7, privacy)
    two = run_private_counter(stream, view, 1.7, privacy)
    ok = all(a == b for a, b in zip(one, two))
    out.append(_result("streaming", "seeded-determinism", ok, "identical outputs across runs"))

    dense = materialize(view)
    scale = np.sqrt(gaussian_constant(0.5, 1e-6)) * 1.7
    worst = 0.0
    for seed in (0, 1, 2):
        outs = run_private_counter([0.0] * 64, view, 1.7, PrivacyParams(0.5, 1e-6, seed))
        z = np.array([step_noise(seed, t, scale) for t in range(1, 65)])
        ref = dense @ z
        got = np.array([o.noise_component for o in outs])
        worst = max(worst, float(np.abs(got - ref).max() / np.abs(ref).max()))
    out.append(_result("streaming", "noise-matches-dense-oracle", worst <= 1e-10, f"rel dev {worst:.3e}"))

    spec = ToeplitzSpec(1.0, 0.0, 16)
    view, _ = _sqrt_view(spec, BinningParams(0.75, 1.0 / 16))
    lhat = materialize(view)
    sens = 1.3
    c_priv = gaussian_constant(0.5, 1e-6)
    target = c_priv * sens * sens * (lhat * lhat).sum(axis=1)
    acc = np.zeros(16)
    runs = 4000
    for seed in range(runs):
        outs = run_private_counter([0.0] * 16, view, sens, PrivacyParams(0.5, 1e-6, seed))
        acc += np.fromiter((o.noise_component for o in outs), np.float64, 16) ** 2
    rel = float((np.abs(acc / runs - target) / target).max())
    out.append(_result("streaming", "variance-identity-quick", rel <= 0.1,
                       f"n=16, {runs} runs, max rel dev {rel:.3f}"))
    return out


SUITES = {
    "kernels": _kernels_suite,
    "binning": _binning_suite,
    "perturbation": _perturbation_suite,
    "streaming": _streaming_suite,
}

SUITE_NAMES = tuple(SUITES)


def run_suites(names: list[str] | tuple[str, ...]) -> list[CheckResult]:
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ValueError(f"unknown suite(s): {', '.join(unknown)}")
    results: list[CheckResult] = []
    for name in names:
        results.extend(SUITES[name]())
    return results
