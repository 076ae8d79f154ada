"""Sinkhorn iterations for log-type transport costs with a linear-time kernel."""

__version__ = "0.1.0"

from ._validation import SinkhornDivergenceError, SupportValidationError
from .core import (
    DenseKernel,
    KernelApplicator,
    ScalingPair,
    StoppingRule,
    dense_kernel,
    marginal_error,
    plan_matvec,
    run_sinkhorn,
    transport_cost,
    transport_plan,
)
from .estimators import EntropicTransport, SoftRankTransformer
from .fsl1d import FslKernel1D, monomial_matrix
from .fsl2d import FslKernel2D, grid_points, monomial_matrix_2d
from .logcost import (
    PolynomialCost1D,
    ReflectorRefractorCost,
    cost_matrix,
    expand_power_1d,
    load_cost,
    multinomial,
    ranking_polynomial,
    validate_support,
)
from .ranking import (
    RankingProblem,
    default_grid_and_tau,
    hard_rank,
    minmax_normalize,
    mse,
    preprocess_x,
    sinkhorn_rank,
    soft_rank,
)

__all__ = [
    "DenseKernel",
    "EntropicTransport",
    "FslKernel1D",
    "FslKernel2D",
    "KernelApplicator",
    "PolynomialCost1D",
    "RankingProblem",
    "ReflectorRefractorCost",
    "ScalingPair",
    "SinkhornDivergenceError",
    "SoftRankTransformer",
    "StoppingRule",
    "SupportValidationError",
    "cost_matrix",
    "default_grid_and_tau",
    "dense_kernel",
    "expand_power_1d",
    "grid_points",
    "hard_rank",
    "load_cost",
    "marginal_error",
    "minmax_normalize",
    "monomial_matrix",
    "monomial_matrix_2d",
    "mse",
    "multinomial",
    "plan_matvec",
    "preprocess_x",
    "ranking_polynomial",
    "run_sinkhorn",
    "sinkhorn_rank",
    "soft_rank",
    "transport_cost",
    "transport_plan",
    "validate_support",
]
