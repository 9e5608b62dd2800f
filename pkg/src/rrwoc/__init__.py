"""Robust linear regression without correspondence.

Estimate the linear map, the partial correspondence, and the inlier set
relating two unordered point sets that both contain outliers. Randomized
consensus solvers carry explicit success-probability iteration budgets; an
exhaustive oracle, an outlier-free moment estimator, and a trimmed-ICP
baseline round out the toolkit, together with a simulation and sweep
harness and a CLI (``rrwoc``).
"""

from .assignment import linear_assignment
from .baselines import IcpConfig, trimmed_icp
from .core import (
    Assignment,
    Coefficients,
    MarginSpec,
    ModelEstimate,
    PointSet,
    count_inliers,
    matched_residuals,
    residual_matrix,
    solve_lstsq,
)
from .errors import (
    CloudFileError,
    DegenerateCovariates,
    DegenerateHull,
    DimensionMismatch,
    InstanceTooLarge,
    InvalidParams,
    NoValidHypothesis,
    RankDeficient,
    RrwocError,
    ZeroMomentSum,
)
from .regress1d import (
    Config1D,
    ols_1d,
    oracle_margin_1d,
    q_iterations_1d,
    rrwoc_1d_exhaustive,
    rrwoc_1d_randomized,
    rwoc_1d_moments,
)
from .regressnd import (
    ConfigND,
    evaluate_hypothesis,
    q_iterations_nd,
    rrwoc_nd_exhaustive,
    rrwoc_nd_randomized,
)
from .simulate import (
    SimConfig,
    SimInstance,
    SweepConfig,
    generate_instance,
    in_hull,
    random_rotation_scaled,
    recovery_sweep,
    sample_in_hull,
    write_sweep_csv,
)

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "CloudFileError",
    "Coefficients",
    "Config1D",
    "ConfigND",
    "DegenerateCovariates",
    "DegenerateHull",
    "DimensionMismatch",
    "IcpConfig",
    "InstanceTooLarge",
    "InvalidParams",
    "MarginSpec",
    "ModelEstimate",
    "NoValidHypothesis",
    "PointSet",
    "RankDeficient",
    "RrwocError",
    "SimConfig",
    "SimInstance",
    "SweepConfig",
    "ZeroMomentSum",
    "count_inliers",
    "evaluate_hypothesis",
    "generate_instance",
    "in_hull",
    "linear_assignment",
    "matched_residuals",
    "ols_1d",
    "oracle_margin_1d",
    "q_iterations_1d",
    "q_iterations_nd",
    "random_rotation_scaled",
    "recovery_sweep",
    "residual_matrix",
    "rrwoc_1d_exhaustive",
    "rrwoc_1d_randomized",
    "rrwoc_nd_exhaustive",
    "rrwoc_nd_randomized",
    "rwoc_1d_moments",
    "sample_in_hull",
    "solve_lstsq",
    "trimmed_icp",
    "write_sweep_csv",
]
