"""Hardware-limited task-based quantization with Lloyd-Max scalar quantizers."""
from .mathkit import PsdFactorization, metric_orthogonalize, psd_sqrt, top_right_singular_vectors
from .scalar_quantizer import (
    ScalarQuantizer,
    distortion_factor,
    highrate_rho,
    levels_per_quantizer,
    lloyd_max_empirical,
    lloyd_max_gaussian,
    quantize,
    uniform_quantizer,
)
from .bussgang import BussgangModel, bussgang_from_rho, estimate_bussgang
from .linear_task import (
    LinearTaskModel,
    TaskQuantizerDesign,
    analytic_mse_prop2,
    analytic_mse_theorem1,
    channel_estimation_model,
    design_no_combining,
    design_theorem1,
    gaussian_linear_model,
    optimal_digital,
    run_pipeline,
)
from .quadratic_task import (
    QuadraticTaskModel,
    build_G,
    covariance_recovery_model,
    design_corollary1,
    empirical_moments,
    gaussian_fourth_moments,
    lift,
    quadratic_task_model,
    run_quadratic_pipeline,
)
from .simulator import SimResult, simulate, sweep_bits

__version__ = "0.1.0"

__all__ = [
    "PsdFactorization",
    "metric_orthogonalize",
    "psd_sqrt",
    "top_right_singular_vectors",
    "ScalarQuantizer",
    "distortion_factor",
    "highrate_rho",
    "levels_per_quantizer",
    "lloyd_max_empirical",
    "lloyd_max_gaussian",
    "quantize",
    "uniform_quantizer",
    "BussgangModel",
    "bussgang_from_rho",
    "estimate_bussgang",
    "LinearTaskModel",
    "TaskQuantizerDesign",
    "analytic_mse_prop2",
    "analytic_mse_theorem1",
    "channel_estimation_model",
    "design_no_combining",
    "design_theorem1",
    "gaussian_linear_model",
    "optimal_digital",
    "run_pipeline",
    "QuadraticTaskModel",
    "build_G",
    "covariance_recovery_model",
    "design_corollary1",
    "empirical_moments",
    "gaussian_fourth_moments",
    "lift",
    "quadratic_task_model",
    "run_quadratic_pipeline",
    "SimResult",
    "simulate",
    "sweep_bits",
]
