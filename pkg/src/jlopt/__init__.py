"""Deterministic Johnson-Lindenstrauss projections learned by optimization.

The package learns a fixed k x d projection matrix for a given dataset by
descending an exact failure-probability objective over Gaussian solution
samplers (a mean matrix plus one shared variance), driving the variance to
zero so the mean matrix alone carries the embedding guarantee.  It also
ships the Monte Carlo proxy trainer, the random-baseline comparison, and an
explicit family of datasets on which direct matrix optimization stalls in a
bad local minimum.
"""

from .core import (
    Dataset,
    DistortionReport,
    SamplerParams,
    baseline_gaussian_trials,
    jl_epsilon,
    make_unit_dataset,
    max_distortion,
    sample_gaussian_matrix,
)
from .descent import (
    DescentConfig,
    OptTrace,
    calibrate_epsilon_constant,
    grid_search,
    hessian_descent,
)
from .errors import (
    CalibrationError,
    ConstantMisestimateError,
    ConvergenceError,
    DivergenceError,
    ParameterError,
    SeriesOverflowError,
)
from .hard_instances import (
    BadInstance,
    build_bad_instance,
    instance_distortion,
    norm_ratio_distortion,
    verify_local_min,
)
from .mc_training import McConfig, proxy_gradient, proxy_objective, run_mc_training
from .ncx2 import (
    Ncx2Params,
    backend_name,
    ncx2_cdf,
    ncx2_cdf_ddelta,
    ncx2_pdf,
    ncx2_sf,
    reg_lower_gamma,
)
from .objective import (
    GradientVector,
    ObjectiveContext,
    ReducedPoint,
    f_value,
    failure_prob_point,
    g_value,
    grad_g,
    hessian_vec_product,
    min_eigenpair,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DistortionReport",
    "SamplerParams",
    "baseline_gaussian_trials",
    "jl_epsilon",
    "make_unit_dataset",
    "max_distortion",
    "sample_gaussian_matrix",
    "DescentConfig",
    "OptTrace",
    "calibrate_epsilon_constant",
    "grid_search",
    "hessian_descent",
    "CalibrationError",
    "ConstantMisestimateError",
    "ConvergenceError",
    "DivergenceError",
    "ParameterError",
    "SeriesOverflowError",
    "BadInstance",
    "build_bad_instance",
    "instance_distortion",
    "norm_ratio_distortion",
    "verify_local_min",
    "McConfig",
    "proxy_gradient",
    "proxy_objective",
    "run_mc_training",
    "Ncx2Params",
    "backend_name",
    "ncx2_cdf",
    "ncx2_cdf_ddelta",
    "ncx2_pdf",
    "ncx2_sf",
    "reg_lower_gamma",
    "GradientVector",
    "ObjectiveContext",
    "ReducedPoint",
    "f_value",
    "failure_prob_point",
    "g_value",
    "grad_g",
    "hessian_vec_product",
    "min_eigenpair",
    "__version__",
]
