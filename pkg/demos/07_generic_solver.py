"""
The trust-region solver on its own
==================================

The augmented Lagrangian solver accepts any smooth problem with equality
constraints, inequalities and bounds. Here: the closest point to (2, 1) on
the unit circle with x >= 0.9 enforced as an inequality.
"""

import numpy as np

from smartdm.exact import NlpProblem, SolverOptions, outer_loop

target = np.array([2.0, 1.0])
problem = NlpProblem(
    2,
    objective=lambda x: float((x - target) @ (x - target)),
    gradient=lambda x: 2 * (x - target),
    eq_constraints=lambda x: np.array([x @ x - 1.0]),
    eq_jacobian=lambda x: 2 * x[None, :],
    ineq_constraints=lambda x: np.array([x[0] - 0.9]),
    ineq_jacobian=lambda x: np.array([[1.0, 0.0]]),
)
sol = outer_loop(problem, np.array([1.0, 0.0]), SolverOptions(hessian="bfgs"))
print("x =", np.round(sol.x, 6), " |x| =", round(float(np.linalg.norm(sol.x)), 8))
print(f"converged {sol.converged} after {sol.outer_iterations} outer / {sol.inner_iterations} inner steps")
