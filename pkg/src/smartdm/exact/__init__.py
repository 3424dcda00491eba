"""Augmented Lagrangian trust-region solver for smooth constrained problems."""

from .problem import NlpProblem, augmented_lagrangian, box_projection, kkt_residual, slack_transform
from .quasi_newton import DenseApprox, LimitedMemoryApprox, make_approx, quasi_newton_update
from .solver import ExactSolution, SolverOptions, SolverState, inner_solve, outer_loop
from .trust_region import cauchy_point, modified_cholesky, steihaug_cg, trust_region_update

__all__ = [
    "NlpProblem", "augmented_lagrangian", "box_projection", "kkt_residual", "slack_transform",
    "DenseApprox", "LimitedMemoryApprox", "make_approx", "quasi_newton_update",
    "ExactSolution", "SolverOptions", "SolverState", "inner_solve", "outer_loop",
    "cauchy_point", "modified_cholesky", "steihaug_cg", "trust_region_update",
]

from .dm import dm_nlp, solve_dm_problem  # noqa: E402

__all__ += ["dm_nlp", "solve_dm_problem"]
