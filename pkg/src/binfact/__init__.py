"""Space-efficient factorizations for differentially private counting.

The package factors the running-sum matrix of a damped counter as L R,
replaces the Toeplitz square-root factors with a binned approximation
that keeps only a few interval averages per row, and runs the resulting
mechanism over a stream in space proportional to the bin count instead
of the horizon.
"""

from .binning import (
    Binning,
    BinningParams,
    Interval,
    build_binning,
    collect_binning,
    has_monotone_ratios,
    next_partition,
    verify_binning,
)
from .factorization import (
    FactorizationReport,
    assemble_report,
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
    verify_perturbation,
)
from .kernels import (
    ToeplitzSpec,
    central_binomial,
    central_binomial_diff,
    central_binomial_diff_prefix,
    central_binomial_prefix,
    counting_coeff,
    inv_sqrt_coeff,
    sqrt_coeff,
)
from .matrix import (
    build_toeplitz,
    condition_upper_bound,
    forward_substitute,
    inv_sqrt_opnorm_bound,
    operator_norm,
    sqrt_opnorm_bound,
    toeplitz_from_coeffs,
)
from .mechanism import (
    CounterOutput,
    PrivacyParams,
    gaussian_constant,
    run_private_counter,
    step_noise,
)
from .streaming import (
    BinnedMatrixView,
    StreamState,
    stream_matvec,
    stream_step,
    toeplitz_row_source,
)

__version__ = "0.1.0"

__all__ = [
    "Binning",
    "BinningParams",
    "BinnedMatrixView",
    "CounterOutput",
    "FactorizationReport",
    "Interval",
    "PrivacyParams",
    "StreamState",
    "ToeplitzSpec",
    "assemble_report",
    "binary_tree_factorization",
    "binary_tree_norms",
    "binned_square_root",
    "build_binning",
    "build_report",
    "build_toeplitz",
    "central_binomial",
    "central_binomial_diff",
    "central_binomial_diff_prefix",
    "central_binomial_prefix",
    "collect_binning",
    "condition_upper_bound",
    "counting_coeff",
    "error_ratios",
    "forward_substitute",
    "gaussian_constant",
    "has_monotone_ratios",
    "inv_sqrt_coeff",
    "inv_sqrt_opnorm_bound",
    "max_se",
    "mean_se",
    "next_partition",
    "operator_norm",
    "params_for_blowup",
    "right_factor",
    "run_private_counter",
    "sqrt_coeff",
    "sqrt_opnorm_bound",
    "square_root_error_baseline",
    "step_noise",
    "stream_matvec",
    "stream_step",
    "toeplitz_from_coeffs",
    "toeplitz_row_source",
    "verify_binning",
    "verify_perturbation",
    "__version__",
]
