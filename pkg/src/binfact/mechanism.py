"""Streaming differentially private counter on top of the binned factorization.

At step t the counter outputs the true prefix sum plus the t-th entry of
(Lhat z), where z has i.i.d. Normal(0, C * Delta**2) entries, C the Gaussian
mechanism constant for the requested (epsilon, delta) and Delta the
sensitivity (max column l2-norm) of the right factor, computed offline.
Each z_t is drawn at step t from a counter-based generator keyed by
(seed, t), so no future noise is ever materialized and the live state is the
stream buffer plus two scalars.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import partial
from typing import Iterable

import numpy as np

from .streaming import BinnedMatrixView, StreamState, stream_step

__all__ = [
    "CounterOutput",
    "PrivacyParams",
    "gaussian_constant",
    "run_private_counter",
    "step_noise",
]


def gaussian_constant(epsilon: float, delta: float) -> float:
    """Gaussian-mechanism variance scale 2 ln(1.25/delta) / epsilon**2.

    The analysis behind the constant requires epsilon in (0, 1); epsilon = 1
    is accepted with a warning as a common boundary calibration point.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    if epsilon == 1.0:
        warnings.warn(
            "epsilon = 1 sits on the boundary of the Gaussian-mechanism analysis; "
            "the constant is extrapolated",
            UserWarning,
            stacklevel=2,
        )
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    return 2.0 * math.log(1.25 / delta) / (epsilon * epsilon)


@dataclass(frozen=True)
class PrivacyParams:
    """(epsilon, delta) plus the seed that makes the noise reproducible."""

    epsilon: float
    delta: float
    seed: int = 0

    def __post_init__(self) -> None:
        gaussian_constant(self.epsilon, self.delta)  # range validation
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)):
            raise ValueError(f"seed must be an integer, got {self.seed!r}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")


@dataclass(frozen=True)
class CounterOutput:
    step: int
    true_prefix: float
    noisy_prefix: float
    noise_component: float


def step_noise(seed: int, step: int, scale: float) -> float:
    """The step-th noise draw, reproducible without any generator history.

    Each step owns a disjoint counter block (step << 64), so draws commute:
    step t's noise can be regenerated in isolation, which is what lets the
    counter run without storing z.
    """
    generator = np.random.Generator(np.random.Philox(key=seed, counter=step << 64))
    return scale * float(generator.standard_normal())


def run_private_counter(
    stream: Iterable[float],
    view: BinnedMatrixView,
    sensitivity: float,
    privacy: PrivacyParams,
    state: StreamState | None = None,
) -> list[CounterOutput]:
    """Run the counter over a stream of values in [0, 1].

    ``sensitivity`` is the max column norm of the right factor, precomputed
    offline; passing 0 is the exactness hook (noisy output equals the true
    prefix).  Pass a fresh ``state`` to audit its peak buffer length after
    the run.  Only the returned outputs grow with the stream; the working
    state stays at one buffer cell per partition interval.
    """
    if sensitivity < 0.0:
        raise ValueError(f"sensitivity must be nonnegative, got {sensitivity}")
    scale = math.sqrt(gaussian_constant(privacy.epsilon, privacy.delta)) * sensitivity
    if state is None:
        state = StreamState()
    partitions = view.binning.partitions
    true_prefix = 0.0
    outputs: list[CounterOutput] = []
    for step, value in enumerate(stream, start=1):
        if step > view.n:
            raise ValueError(f"stream is longer than n = {view.n}")
        value = float(value)
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"stream values must lie in [0, 1], got {value} at step {step}")
        true_prefix += value
        z = step_noise(privacy.seed, step, scale)
        _, noise = stream_step(state, partitions[step - 1], z, partial(view.base, step))
        outputs.append(CounterOutput(step, true_prefix, true_prefix + noise, noise))
    return outputs
