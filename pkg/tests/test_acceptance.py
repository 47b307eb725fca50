"""End-to-end acceptance checks, one test per claim, one verdict line each.

Run with -v (or -s to see the verdict lines inline).  Each test prints
"PASS/FAIL criterion N" with the measured numbers before asserting, so a
plain log of this module doubles as the acceptance report.
"""

import math
import time

import numpy as np
import pytest

from binfact import (
    BinnedMatrixView,
    BinningParams,
    PrivacyParams,
    StreamState,
    ToeplitzSpec,
    binned_square_root,
    build_report,
    collect_binning,
    condition_upper_bound,
    gaussian_constant,
    params_for_blowup,
    run_private_counter,
    sqrt_opnorm_bound,
    stream_matvec,
    toeplitz_from_coeffs,
    toeplitz_row_source,
    verify_perturbation,
)
from binfact.streaming import materialize

ALPHA_BETA_GRID = ((1.0, 0.0), (1.0, 0.9), (0.99, 0.0), (0.99, 0.95))


def _finish(num, label, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} criterion {num} ({label}): {detail}")
    assert ok, f"criterion {num} ({label}): {detail}"


def test_criterion_01_reference_point_reproduction():
    start = time.perf_counter()
    report = build_report(ToeplitzSpec(1.0, 0.0, 50), BinningParams(0.75, 0.02))
    wall = time.perf_counter() - start
    ok = (
        report.bin_size == 8
        and abs(report.mean_se_ratio - 0.9965) <= 5e-4
        and abs(report.max_se_ratio - 0.9951) <= 5e-4
        and wall < 1.0
    )
    _finish(
        1,
        "reference reproduction",
        ok,
        f"bin_size={report.bin_size}, mean_ratio={report.mean_se_ratio:.6f}, "
        f"max_ratio={report.max_se_ratio:.6f}, wall={wall:.3f}s",
    )


def test_criterion_02_square_root_identity():
    start = time.perf_counter()
    worst = 0.0
    for n in (16, 128, 512):
        for alpha, beta in ALPHA_BETA_GRID:
            spec = ToeplitzSpec(alpha, beta, n)
            b = toeplitz_from_coeffs(spec.sqrt_coeffs)
            a = toeplitz_from_coeffs(spec.counting_coeffs)
            worst = max(worst, float(np.abs(b @ b - a).max()))
    wall = time.perf_counter() - start
    ok = worst <= 1e-9 and wall < 10.0
    _finish(2, "square-root identity", ok, f"max |B^2 - A| = {worst:.3e}, wall={wall:.2f}s")


def test_criterion_03_kernel_bounds():
    start = time.perf_counter()
    kmax = 10_000
    ok = True
    # difference-kernel two-sided bounds, k >= 1
    from binfact import central_binomial_diff_prefix

    dg = central_binomial_diff_prefix(kmax + 1)[1:]
    k = np.arange(1, kmax + 1, dtype=np.float64)
    lo = -1.0 / (np.sqrt(np.pi * k) * (2 * k - 1))
    hi = -1.0 / (2.0 * np.sqrt(k) * (2 * k - 1))
    ok &= bool((dg >= lo - 1e-15).all() and (dg <= hi + 1e-15).all())
    # square-root coefficient sandwich across the damping grid
    worst_rel = 0.0
    for alpha, beta in ALPHA_BETA_GRID:
        spec = ToeplitzSpec(alpha, beta, kmax + 1)
        j = np.arange(kmax + 1, dtype=np.float64)
        blo = alpha**j / (2.0 * np.sqrt(j + 1.0))
        bhi = alpha**j / ((1.0 - beta / alpha) * np.sqrt(j + 1.0))
        b = spec.sqrt_coeffs
        ok &= bool((b >= blo * (1 - 1e-12)).all() and (b <= bhi * (1 + 1e-12)).all())
        with np.errstate(divide="ignore"):
            worst_rel = max(worst_rel, float(np.max(np.maximum(blo / b, b / bhi))))
    wall = time.perf_counter() - start
    ok &= wall < 5.0
    _finish(3, "kernel bounds to k=1e4", ok,
            f"tightest sandwich ratio {worst_rel:.6f} (must be <= 1), wall={wall:.2f}s")


def test_criterion_04_perturbation_lemma():
    failures = []
    for n in (64, 256):
        for d in (1.5, 2.0, 4.0, 8.0, 16.0):
            c, tau = 1.0 - 1.0 / d, 1.0 / n
            for alpha, beta in ALPHA_BETA_GRID:
                spec = ToeplitzSpec(alpha, beta, n)
                lhat, _, _ = binned_square_root(spec, BinningParams(c, tau))
                base = toeplitz_from_coeffs(spec.sqrt_coeffs)
                if not verify_perturbation(base, lhat, 1.0 / c**2 - 1.0, tau):
                    failures.append((n, d, alpha, beta))
    ok = not failures
    _finish(4, "entrywise perturbation bound", ok,
            "40 grid points within (1/c^2-1, tau)" if ok else f"violations: {failures}")


def test_criterion_05_budgeted_parameters_end_to_end():
    xi = 0.5
    worst = 0.0
    details = []
    for n in (128, 512, 1024):
        spec = ToeplitzSpec(1.0, 0.0, n)
        params = params_for_blowup(
            xi, condition_upper_bound(spec), sqrt_opnorm_bound(spec), n
        )
        report = build_report(spec, params)
        worst = max(worst, report.mean_se_ratio, report.max_se_ratio)
        details.append(f"n={n}: ({report.mean_se_ratio:.4f}, {report.max_se_ratio:.4f})")
    ok = worst <= 1.0 + xi
    _finish(5, "blow-up budget", ok, "; ".join(details) + f", cap {1.0 + xi}")


def test_criterion_06_streaming_matches_dense():
    n = 256
    spec = ToeplitzSpec(1.0, 0.0, n)
    source = toeplitz_row_source(spec.sqrt_coeffs)
    binning = collect_binning(source, n, BinningParams(0.75, 1.0 / n))
    view = BinnedMatrixView(source, binning, n)
    dense = materialize(view)
    rng = np.random.default_rng(2026)
    worst = 0.0
    state = StreamState()
    for _ in range(20):
        z = rng.standard_normal(n)
        streamed = stream_matvec(view, z, StreamState())
        ref = dense @ z
        worst = max(worst, float(np.max(np.abs(streamed - ref) / np.maximum(np.abs(ref), 1e-30))))
    stream_matvec(view, np.ones(n), state)
    ok = worst <= 1e-10 and state.peak == binning.size
    _finish(6, "streaming oracle equivalence", ok,
            f"worst rel dev {worst:.3e}, peak {state.peak} == bin size {binning.size}")


def test_criterion_07_reconstruction_residual():
    worst_scaled = 0.0
    for n in (16, 128, 512, 2048):
        for d in (2.0, 16.0):
            for alpha, beta in ALPHA_BETA_GRID:
                spec = ToeplitzSpec(alpha, beta, n)
                lhat, rhat, _ = binned_square_root(
                    spec, BinningParams(1.0 - 1.0 / d, 1.0 / n)
                )
                a = toeplitz_from_coeffs(spec.counting_coeffs)
                residual = float(np.abs(lhat @ rhat - a).max())
                worst_scaled = max(worst_scaled, residual / (1e-8 * n))
    ok = worst_scaled <= 1.0
    _finish(7, "reconstruction residual", ok,
            f"worst residual at {worst_scaled:.3e} of the 1e-8*n budget")


def test_criterion_08_sublinear_space_wins():
    n = 4096
    hit = None
    for d in (16.0, 32.0, 8.0):
        report = build_report(
            ToeplitzSpec(1.0, 0.0, n), BinningParams(1.0 - 1.0 / d, 1.0 / n)
        )
        if report.mean_se_ratio < 1.0 and report.bin_size < n // 4:
            hit = (d, report.bin_size, report.mean_se_ratio)
            break
    # trend checks on a cheaper size
    sizes, ratios = [], []
    for d in (1.5, 2.0, 4.0, 8.0, 16.0, 32.0):
        rep = build_report(
            ToeplitzSpec(1.0, 0.0, 512), BinningParams(1.0 - 1.0 / d, 1.0 / 512)
        )
        sizes.append(rep.bin_size)
        ratios.append(rep.mean_se_ratio)
    monotone_size = sizes == sorted(sizes)
    coarse_is_worst = max(ratios) == ratios[0] and ratios[-1] < ratios[0]
    ok = hit is not None and monotone_size and coarse_is_worst
    _finish(8, "sublinear space with better error", ok,
            f"n=4096 hit {hit}, n=512 sizes {sizes}, coarse-to-fine ratios "
            + "->".join(f"{r:.4f}" for r in ratios))


def test_criterion_09_noise_variance_calibration():
    start = time.perf_counter()
    n, runs = 64, 10_000
    epsilon, delta = 0.5, 1e-6
    spec = ToeplitzSpec(1.0, 0.0, n)
    source = toeplitz_row_source(spec.sqrt_coeffs)
    lhat, rhat, binning = binned_square_root(spec, BinningParams(0.75, 1.0 / n))
    view = BinnedMatrixView(source, binning, n)
    sensitivity = float(np.sqrt((rhat**2).sum(axis=0).max()))
    target = gaussian_constant(epsilon, delta) * sensitivity**2 * (lhat**2).sum(axis=1)
    acc = np.zeros(n)
    zeros = [0.0] * n
    for seed in range(runs):
        outputs = run_private_counter(
            zeros, view, sensitivity, PrivacyParams(epsilon, delta, seed=seed)
        )
        acc += np.square([o.noise_component for o in outputs])
    rel = float((np.abs(acc / runs - target) / target).max())
    wall = time.perf_counter() - start
    ok = rel <= 0.05 and wall < 60.0
    _finish(9, "mechanism variance", ok,
            f"max rel deviation {rel:.4f} over {runs} runs, wall={wall:.1f}s")


def test_criterion_10_damped_variants_hold_up():
    details = []
    ok = True
    for beta, c in ((0.9, 0.85), (0.95, 0.9)):
        report = build_report(ToeplitzSpec(1.0, beta, 50), BinningParams(c, 0.02))
        ok &= report.bin_size == 8 and report.mean_se_ratio < 1.02
        details.append(
            f"beta={beta}: bin_size={report.bin_size}, mean_ratio={report.mean_se_ratio:.4f}"
        )
    _finish(10, "damped counting regression", ok, "; ".join(details))
