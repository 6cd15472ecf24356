"""Local polynomial Lp-norm regression toolkit.

Kernel-weighted Lp curve fitting with data-driven selection of the norm
exponent and bandwidth, bootstrap confidence bands, and a Monte-Carlo
simulation lab for LLS/LLP comparisons.
"""

from .ged import (
    GedParams,
    ged_abs_moment,
    ged_cdf,
    ged_density,
    ged_kurtosis,
    ged_quantile,
    ged_sample,
)
from .inference import BandResult, BandSpec, bias_reduced_pilot, bootstrap_bands
from .kernels import GAUSSIAN, Kernel, KernelConstants, kernel_constants, kernel_weight
from .localreg import (
    AsymptoticMoments,
    Dataset1D,
    Dataset2D,
    FitResult,
    FitSpec,
    asymptotic_moments,
    default_grid,
    default_grid_2d,
    fit_local_1d,
    fit_local_2d,
)
from .lpsolve import (
    DegenerateProblemError,
    LpProblem,
    LpSolution,
    lp_minimize,
    lp_minimize_batch,
)
from .simlab import (
    ErrorModel,
    ExperimentError,
    SimRow,
    draw_errors,
    run_experiment,
    run_experiment_2d,
    target_function,
    target_function_2d,
    write_report_csv,
    write_report_json,
)
from .tuning import (
    BandwidthResult,
    PGrid,
    PipelineFit,
    QEstimate,
    auto_fit,
    convert_bandwidth,
    convert_bandwidth_ged,
    estimate_p_K,
    estimate_p_Q,
    select_h2,
)

__version__ = "0.1.0"

__all__ = [
    "GAUSSIAN",
    "AsymptoticMoments",
    "BandResult",
    "BandSpec",
    "BandwidthResult",
    "Dataset1D",
    "Dataset2D",
    "DegenerateProblemError",
    "ErrorModel",
    "ExperimentError",
    "FitResult",
    "FitSpec",
    "GedParams",
    "Kernel",
    "KernelConstants",
    "LpProblem",
    "LpSolution",
    "PGrid",
    "PipelineFit",
    "QEstimate",
    "SimRow",
    "asymptotic_moments",
    "auto_fit",
    "bias_reduced_pilot",
    "bootstrap_bands",
    "convert_bandwidth",
    "convert_bandwidth_ged",
    "default_grid",
    "default_grid_2d",
    "draw_errors",
    "estimate_p_K",
    "estimate_p_Q",
    "fit_local_1d",
    "fit_local_2d",
    "ged_abs_moment",
    "ged_cdf",
    "ged_density",
    "ged_kurtosis",
    "ged_quantile",
    "ged_sample",
    "kernel_constants",
    "kernel_weight",
    "lp_minimize",
    "lp_minimize_batch",
    "run_experiment",
    "run_experiment_2d",
    "select_h2",
    "target_function",
    "target_function_2d",
    "write_report_csv",
    "write_report_json",
]
