"""Private counter tests: calibration, determinism, and noise accounting."""

import math

import numpy as np
import pytest

from binfact import (
    BinnedMatrixView,
    BinningParams,
    PrivacyParams,
    StreamState,
    ToeplitzSpec,
    collect_binning,
    gaussian_constant,
    run_private_counter,
    step_noise,
    toeplitz_row_source,
)
from binfact.streaming import materialize


def make_view(n, c=0.75, tau=None):
    spec = ToeplitzSpec(1.0, 0.0, n)
    source = toeplitz_row_source(spec.sqrt_coeffs)
    binning = collect_binning(source, n, BinningParams(c, tau or 1.0 / n))
    return BinnedMatrixView(source, binning, n)


class TestGaussianConstant:
    def test_reference_value(self):
        # 2 ln(1.25/1e-6) / 0.25
        assert gaussian_constant(0.5, 1e-6) == pytest.approx(112.30923, abs=1e-4)

    def test_boundary_epsilon_warns(self):
        with pytest.warns(UserWarning):
            c = gaussian_constant(1.0, 0.25)
        assert c == pytest.approx(2.0 * math.log(5.0))

    def test_monotone_in_epsilon_and_delta(self):
        assert gaussian_constant(0.25, 1e-6) > gaussian_constant(0.5, 1e-6)
        assert gaussian_constant(0.5, 1e-9) > gaussian_constant(0.5, 1e-6)

    @pytest.mark.parametrize("eps", [0.0, -0.5, 1.5])
    def test_epsilon_range(self, eps):
        with pytest.raises(ValueError):
            gaussian_constant(eps, 1e-6)

    @pytest.mark.parametrize("delta", [0.0, 1.0, -1e-6])
    def test_delta_range(self, delta):
        with pytest.raises(ValueError):
            gaussian_constant(0.5, delta)


class TestPrivacyParams:
    def test_valid_roundtrip(self):
        p = PrivacyParams(0.5, 1e-6, seed=3)
        assert (p.epsilon, p.delta, p.seed) == (0.5, 1e-6, 3)

    def test_rejects_bad_ranges(self):
        with pytest.raises(ValueError):
            PrivacyParams(2.0, 1e-6)
        with pytest.raises(ValueError):
            PrivacyParams(0.5, 0.0)
        with pytest.raises(ValueError):
            PrivacyParams(0.5, 1e-6, seed=-1)
        with pytest.raises(ValueError):
            PrivacyParams(0.5, 1e-6, seed=True)


class TestStepNoise:
    def test_deterministic_per_key(self):
        assert step_noise(7, 3, 2.0) == step_noise(7, 3, 2.0)

    def test_varies_across_steps_and_seeds(self):
        draws = {step_noise(7, s, 1.0) for s in range(1, 50)}
        assert len(draws) == 49
        assert step_noise(7, 3, 1.0) != step_noise(8, 3, 1.0)

    def test_scale_is_linear(self):
        assert step_noise(1, 5, 3.0) == pytest.approx(3.0 * step_noise(1, 5, 1.0))

    def test_standard_normal_statistics(self):
        draws = np.array([step_noise(0, s, 1.0) for s in range(1, 4001)])
        assert abs(draws.mean()) < 0.06
        assert abs(draws.std() - 1.0) < 0.05


class TestRunPrivateCounter:
    def test_zero_sensitivity_recovers_truth(self):
        view = make_view(16)
        stream = [1.0, 0.0, 1.0, 1.0, 0.0, 0.5, 1.0, 0.0]
        outputs = run_private_counter(stream, view, 0.0, PrivacyParams(0.5, 1e-6))
        assert [o.true_prefix for o in outputs] == pytest.approx(
            np.cumsum(stream).tolist()
        )
        for o in outputs:
            assert o.noisy_prefix == pytest.approx(o.true_prefix)
            assert o.noise_component == 0.0

    def test_deterministic_given_seed(self):
        view = make_view(12)
        stream = [1.0] * 12
        p = PrivacyParams(0.5, 1e-6, seed=11)
        first = run_private_counter(stream, view, 1.5, p)
        second = run_private_counter(stream, view, 1.5, p)
        assert [o.noisy_prefix for o in first] == [o.noisy_prefix for o in second]

    def test_noise_matches_dense_oracle(self):
        # the streamed noise column must be exactly Lhat z for the same z
        n = 32
        view = make_view(n)
        p = PrivacyParams(0.5, 1e-6, seed=5)
        scale = math.sqrt(gaussian_constant(0.5, 1e-6)) * 1.25
        z = np.array([step_noise(5, t, scale) for t in range(1, n + 1)])
        dense_noise = materialize(view) @ z
        outputs = run_private_counter([0.0] * n, view, 1.25, p)
        np.testing.assert_allclose(
            [o.noise_component for o in outputs], dense_noise, rtol=1e-12, atol=1e-12
        )

    def test_peak_state_is_bin_size(self):
        view = make_view(64)
        state = StreamState()
        run_private_counter([1.0] * 64, view, 1.0, PrivacyParams(0.5, 1e-6), state)
        assert state.peak == view.binning.size

    def test_partial_stream_is_allowed(self):
        view = make_view(32)
        outputs = run_private_counter([1.0] * 10, view, 1.0, PrivacyParams(0.5, 1e-6))
        assert len(outputs) == 10

    def test_rejects_long_stream_and_bad_values(self):
        view = make_view(4)
        p = PrivacyParams(0.5, 1e-6)
        with pytest.raises(ValueError):
            run_private_counter([0.0] * 5, view, 1.0, p)
        with pytest.raises(ValueError):
            run_private_counter([2.0], view, 1.0, p)
        with pytest.raises(ValueError):
            run_private_counter([-0.1], view, 1.0, p)
        with pytest.raises(ValueError):
            run_private_counter([0.0], view, -1.0, p)

    def test_variance_calibration_monte_carlo(self):
        # per-step output variance must be C * Delta^2 * ||row of Lhat||^2
        n, runs = 8, 3000
        view = make_view(n)
        lhat = materialize(view)
        sensitivity = 0.8
        const = gaussian_constant(0.5, 1e-6)
        target = const * sensitivity**2 * (lhat**2).sum(axis=1)
        acc = np.zeros(n)
        for seed in range(runs):
            outputs = run_private_counter(
                [0.0] * n, view, sensitivity, PrivacyParams(0.5, 1e-6, seed=seed)
            )
            acc += np.square([o.noise_component for o in outputs])
        rel = np.abs(acc / runs - target) / target
        assert rel.max() < 0.15
