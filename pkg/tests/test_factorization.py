"""Factorization assembly, error accounting, and baselines."""

import numpy as np
import pytest

from binfact import (
    BinningParams,
    ToeplitzSpec,
    binary_tree_factorization,
    binary_tree_norms,
    binned_square_root,
    build_report,
    error_ratios,
    max_se,
    mean_se,
    params_for_blowup,
    right_factor,
    square_root_error_baseline,
    toeplitz_from_coeffs,
    verify_perturbation,
)


def plain_factors(n):
    spec = ToeplitzSpec(1.0, 0.0, n)
    b = toeplitz_from_coeffs(spec.sqrt_coeffs)
    return spec, b


class TestErrorFunctionals:
    def test_mean_se_frozen_small_case(self):
        # n=2 square-root factors: frob^2 = 2.25, max col^2 = 1.25
        _, b = plain_factors(2)
        assert mean_se(b, b) == pytest.approx(1.40625)
        assert max_se(b, b) == pytest.approx(1.5625)

    def test_matches_norm_definitions(self):
        rng = np.random.default_rng(3)
        l = rng.standard_normal((6, 4))
        r = rng.standard_normal((4, 6))
        frob_sq = (l**2).sum()
        col_sq = (r**2).sum(axis=0).max()
        row_sq = (l**2).sum(axis=1).max()
        assert mean_se(l, r) == pytest.approx(frob_sq * col_sq / 6)
        assert max_se(l, r) == pytest.approx(row_sq * col_sq)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            mean_se(np.eye(3), np.eye(4))
        with pytest.raises(ValueError):
            max_se(np.eye(3), np.eye(4))

    def test_error_ratios_of_identical_pairs_is_one(self):
        _, b = plain_factors(8)
        mean_ratio, max_ratio = error_ratios((b, b), (b, b))
        assert mean_ratio == pytest.approx(1.0)
        assert max_ratio == pytest.approx(1.0)

    def test_error_ratios_zero_baseline_rejected(self):
        z = np.zeros((2, 2))
        with pytest.raises(ValueError):
            error_ratios((z, z), (z, z))

    def test_baseline_formula_matches_dense(self):
        for alpha, beta in [(1.0, 0.0), (1.0, 0.9), (0.99, 0.5)]:
            spec = ToeplitzSpec(alpha, beta, 60)
            b = toeplitz_from_coeffs(spec.sqrt_coeffs)
            want_mean, want_max = mean_se(b, b), max_se(b, b)
            got_mean, got_max = square_root_error_baseline(spec)
            assert got_mean == pytest.approx(want_mean, rel=1e-12)
            assert got_max == pytest.approx(want_max, rel=1e-12)


class TestRightFactor:
    def test_completes_to_counting_matrix(self):
        spec = ToeplitzSpec(1.0, 0.5, 40)
        lhat, rhat, _ = binned_square_root(spec, BinningParams(0.75, 0.02))
        a = toeplitz_from_coeffs(spec.counting_coeffs)
        np.testing.assert_allclose(lhat @ rhat, a, atol=1e-10)

    def test_right_factor_known_answer(self):
        l = np.array([[1.0, 0.0], [1.0, 2.0]])
        product = np.array([[1.0, 0.0], [3.0, 4.0]])
        np.testing.assert_allclose(
            right_factor(l, product), [[1.0, 0.0], [1.0, 2.0]]
        )


class TestVerifyPerturbation:
    def test_accepts_within_slack(self):
        base = np.array([[1.0, 0.0], [0.5, 1.0]])
        approx = base + np.array([[0.05, 0.0], [0.02, -0.05]])
        assert verify_perturbation(base, approx, rel_slack=0.1, abs_slack=0.0)

    def test_rejects_outside_slack(self):
        base = np.ones((2, 2))
        approx = base + 0.2
        assert not verify_perturbation(base, approx, rel_slack=0.1, abs_slack=0.01)

    def test_abs_slack_covers_tiny_entries(self):
        base = np.array([[0.0, 0.0], [1e-12, 0.0]])
        approx = base + 1e-9
        assert verify_perturbation(base, approx, rel_slack=0.0, abs_slack=1e-8)

    def test_validation(self):
        with pytest.raises(ValueError):
            verify_perturbation(np.eye(2), np.eye(3), 0.1, 0.1)
        with pytest.raises(ValueError):
            verify_perturbation(np.eye(2), np.eye(2), -0.1, 0.0)

    def test_binned_factor_is_bounded_perturbation(self):
        # the binned factor must stay within (1/c^2 - 1, tau) of the base
        spec = ToeplitzSpec(1.0, 0.0, 128)
        c, tau = 0.8, 0.01
        lhat, _, _ = binned_square_root(spec, BinningParams(c, tau))
        base = toeplitz_from_coeffs(spec.sqrt_coeffs)
        assert verify_perturbation(base, lhat, 1.0 / c**2 - 1.0, tau)


class TestParamsForBlowup:
    def test_frozen_values_at_trivial_bounds(self):
        params = params_for_blowup(24.0, 1.0, 1.0, 1)
        assert params.c == pytest.approx(np.exp(-1.0 / 24.0))
        assert params.tau == pytest.approx(24.0 / 144.0)

    def test_tighter_kappa_means_finer_binning(self):
        loose = params_for_blowup(1.0, 50.0, 10.0, 100)
        tight = params_for_blowup(1.0, 5.0, 10.0, 100)
        # a larger condition bound pushes c toward 1 (finer) and tau down
        assert loose.c > tight.c
        assert loose.tau < tight.tau

    def test_validation(self):
        with pytest.raises(ValueError):
            params_for_blowup(0.0, 2.0, 1.0, 10)
        with pytest.raises(ValueError):
            params_for_blowup(25.0, 2.0, 1.0, 10)
        with pytest.raises(ValueError):
            params_for_blowup(1.0, 0.5, 1.0, 10)
        with pytest.raises(ValueError):
            params_for_blowup(1.0, 2.0, 0.0, 10)
        with pytest.raises(ValueError):
            params_for_blowup(1.0, 2.0, 1.0, 0)


class TestBinaryTree:
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 16, 100])
    def test_product_is_all_ones_lower_triangle(self, n):
        l, r = binary_tree_factorization(n)
        np.testing.assert_array_equal(l @ r, np.tril(np.ones((n, n))))

    def test_two_step_sensitivity(self):
        _, r = binary_tree_factorization(2)
        assert np.sqrt((r**2).sum(axis=0).max()) == pytest.approx(np.sqrt(2.0))

    def test_left_factor_rows_are_sparse(self):
        n = 64
        l, _ = binary_tree_factorization(n)
        assert (l != 0).sum(axis=1).max() <= n.bit_length()

    @pytest.mark.parametrize("n", [1, 2, 5, 16, 33, 128])
    def test_norms_shortcut_matches_dense(self, n):
        l, r = binary_tree_factorization(n)
        frob_sq, rowmax_sq, sens_sq = binary_tree_norms(n)
        assert frob_sq == pytest.approx((l**2).sum())
        assert rowmax_sq == pytest.approx((l**2).sum(axis=1).max())
        assert sens_sq == pytest.approx((r**2).sum(axis=0).max())

    def test_validation(self):
        with pytest.raises(ValueError):
            binary_tree_factorization(0)
        with pytest.raises(ValueError):
            binary_tree_norms(0)


class TestReports:
    def test_reference_report(self):
        report = build_report(ToeplitzSpec(1.0, 0.0, 50), BinningParams(0.75, 0.02))
        assert report.bin_size == 8
        assert report.mean_se_ratio == pytest.approx(0.996503, abs=5e-4)
        assert report.max_se_ratio == pytest.approx(0.995139, abs=5e-4)
        assert report.c == 0.75
        assert report.n == 50

    def test_report_consistency(self):
        report = build_report(ToeplitzSpec(1.0, 0.9, 64), BinningParams(0.8, 0.05))
        assert report.mean_se == pytest.approx(
            report.frobenius_l**2 * report.sensitivity**2 / 64
        )
        assert report.max_se == pytest.approx(
            report.row_max_l**2 * report.sensitivity**2
        )
        base_mean, base_max = square_root_error_baseline(ToeplitzSpec(1.0, 0.9, 64))
        assert report.mean_se_ratio == pytest.approx(report.mean_se / base_mean)
        assert report.max_se_ratio == pytest.approx(report.max_se / base_max)
