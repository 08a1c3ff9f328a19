"""Multi-objective gradient descent toolkit.

Descent directions that treat several losses at once: the equiangular
direction (min-norm combination of *normalized* gradients, rescaled back
onto the gradients' scale) and the classic min-norm hull direction, both
driven by a Frank-Wolfe simplex solver. Includes analytic benchmarks,
small hand-backpropagated networks, dataset utilities for imbalanced and
two-task experiments, and a config-driven experiment CLI.
"""

from .direction import (
    DirectionResult,
    GradientSet,
    bisector_two,
    edm_direction,
    mgda_direction,
    normalization_factor,
    stationarity_residual,
)
from .exceptions import DataError, NumericalError
from .minnorm import (
    FwConfig,
    FwResult,
    combination_norm_sq,
    frank_wolfe_min_norm,
    fw_line_search,
    gram_matrix,
)
from .optimize import (
    IterationTrace,
    OptimizerConfig,
    RunResult,
    run_edm,
    run_mgda,
    run_multitask,
    run_weighted_sum,
)
from .problems import (
    QuadraticPair,
    ScaledProblem,
    finite_diff_gradient,
    pareto_set_distance,
    quadratic_losses,
    scaled_losses,
)

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "DirectionResult",
    "FwConfig",
    "FwResult",
    "GradientSet",
    "IterationTrace",
    "NumericalError",
    "OptimizerConfig",
    "QuadraticPair",
    "RunResult",
    "ScaledProblem",
    "bisector_two",
    "combination_norm_sq",
    "edm_direction",
    "finite_diff_gradient",
    "frank_wolfe_min_norm",
    "fw_line_search",
    "gram_matrix",
    "mgda_direction",
    "normalization_factor",
    "pareto_set_distance",
    "quadratic_losses",
    "run_edm",
    "run_mgda",
    "run_multitask",
    "run_weighted_sum",
    "scaled_losses",
    "stationarity_residual",
]
