"""Bias-variance optimal design matrices and contrasts for families of candidate GLMs."""

__version__ = "0.1.0"

from .glm import CandidateModel, ProposedDesign, glm_fit, performance_measures  # noqa: E402
from .objective import ProblemSpec, assemble, objective_value, value_and_grads  # noqa: E402
from .pgd import OptimizationResult, PgdOptions, optimize  # noqa: E402
from .selection import init_design, select_size, select_size_robust  # noqa: E402

__all__ = [
    "CandidateModel", "ProposedDesign", "glm_fit", "performance_measures",
    "ProblemSpec", "assemble", "objective_value", "value_and_grads",
    "OptimizationResult", "PgdOptions", "optimize",
    "init_design", "select_size", "select_size_robust",
]
