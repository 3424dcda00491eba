"""Projected gradient descent with a multiplicative step-size rule.

Column constraints ``Z A = B`` and contrast constraints ``C c = d`` are kept
exactly by stepping along projected gradients ``S P_A`` and ``P_{C^T} T``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleStart, InvalidInput, SingularConstraint, SingularDesign
from .objective import objective_value, value_and_grads

log = logging.getLogger(__name__)

OBJECTIVE_TOLERANCE = "ObjectiveTolerance"
STEP_TOLERANCE = "StepTolerance"
ITERATION_CAP = "IterationCap"

COND_LIMIT = 1e12
FEASIBILITY_TOL = 1e-10


@dataclass(frozen=True)
class PgdOptions:
    alpha0: float = 1e-4
    theta: float = 2.0
    eta1: float = 1e-8
    eta2: float = 1e-8
    max_outer: int = 50_000
    max_inner: int = 200

    def __post_init__(self):
        if not 0 < self.alpha0 < 1e-3:
            raise InvalidInput(f"alpha0 must lie in (0, 1e-3), got {self.alpha0}")
        if not 1 < self.theta <= 5:
            raise InvalidInput(f"theta must lie in (1, 5], got {self.theta}")
        if not 0 < self.eta1 < 1e-6 or not 0 < self.eta2 < 1e-6:
            raise InvalidInput("eta1 and eta2 must lie in (0, 1e-6)")
        if self.max_outer < 1 or self.max_inner < 1:
            raise InvalidInput("iteration caps must be positive")


@dataclass
class OptimizationResult:
    """Optimal design, contrast and objective, with the iterate trace.

    ``trace`` rows are ``(iteration, objective, step, accepted)`` where
    ``step`` is the step size tried (the trust-region radius for the exact
    solver). Row 0 holds the starting objective.
    """

    Z_hat: np.ndarray
    c_hat: np.ndarray
    F_hat: float
    trace: list = field(default_factory=list)
    termination: str = ""
    iterations: int = 0
    info: dict = field(default_factory=dict)


def constraint_projectors(A, C, p=None):
    """Orthogonal projectors ``P_A = I - A (A^T A)^{-1} A^T`` and ``P_{C^T} = I - C^T (C C^T)^{-1} C``."""
    A = np.asarray(A, dtype=float)
    C = np.asarray(C, dtype=float)
    if p is None:
        p = A.shape[0] if A.ndim == 2 and A.shape[0] else C.shape[1]
    if A.size == 0:
        P_A = np.eye(p)
    else:
        P_A = np.eye(p) - A @ _solve_gram(A.T @ A, A.T, "A^T A")
    if C.size == 0:
        P_C = np.eye(p)
    else:
        P_C = np.eye(p) - C.T @ _solve_gram(C @ C.T, C, "C C^T")
    return 0.5 * (P_A + P_A.T), 0.5 * (P_C + P_C.T)


def _solve_gram(G, rhs, name):
    if np.linalg.cond(G) > 1e14:
        raise SingularConstraint(f"{name} is singular")
    return np.linalg.solve(G, rhs)


def feasibility_check(Z, c, A, B, C, d):
    """Max-norm residuals ``|Z A - B|`` and ``|C c - d|``."""
    Z = np.asarray(Z, dtype=float)
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    C = np.asarray(C, dtype=float)
    rz = 0.0 if A.size == 0 else float(np.max(np.abs(Z @ A - np.asarray(B))))
    if C.size == 0:
        rc = 0.0
    else:
        rc = float(np.max(np.abs(C @ c - np.asarray(d).reshape((C.shape[0],) + c.shape[1:]))))
    return {"design": rz, "contrast": rc}


def _well_conditioned(Z):
    s = np.linalg.svd(Z, compute_uv=False)
    return s[-1] > 0 and (s[0] / s[-1]) ** 2 <= COND_LIMIT


def _safe_value(Z, c, ao):
    if not _well_conditioned(Z):
        return np.inf
    try:
        return objective_value(Z, c, ao)
    except SingularDesign:
        return np.inf


def optimize(ao, spec, init_Z, init_c, opts=None, callback=None):
    """Minimize the composite objective from a feasible start.

    Parameters
    ----------
    ao : AssembledObjective
    spec : ProblemSpec
        Supplies the constraint matrices.
    init_Z, init_c : arrays
        Feasible starting design and contrast(s).
    opts : PgdOptions, optional
    callback : callable, optional
        ``callback(j, Z, c, F)`` after each accepted step.

    Returns
    -------
    OptimizationResult
    """
    opts = PgdOptions() if opts is None else opts
    Z = np.array(init_Z, dtype=float)
    c = np.array(init_c, dtype=float)
    if Z.shape != (spec.n, spec.p):
        raise InvalidInput(f"initial Z must have shape ({spec.n}, {spec.p}), got {Z.shape}")
    d = spec.d if c.ndim == 1 else spec.d.reshape(spec.C.shape[0], -1)
    feas = feasibility_check(Z, c, spec.A, spec.B, spec.C, d)
    if max(feas.values()) > FEASIBILITY_TOL * max(1.0, np.abs(Z).max()):
        raise InfeasibleStart(f"initial point violates constraints: {feas}")
    if not _well_conditioned(Z):
        raise SingularDesign("initial design is ill conditioned")
    P_A, P_C = constraint_projectors(spec.A, spec.C, spec.p)

    alpha = opts.alpha0
    F_cur, S, T = value_and_grads(Z, c, ao)
    trace = [(0, F_cur, 0.0, True)]
    termination = ITERATION_CAP
    j = 0
    while j < opts.max_outer:
        dZ = S @ P_A
        dc = P_C @ T
        accepted = False
        for _ in range(opts.max_inner):
            Z_new = Z - alpha * dZ
            c_new = c - alpha * dc
            F_new = _safe_value(Z_new, c_new, ao)
            if F_new < F_cur:
                trace.append((j + 1, F_new, alpha, True))
                alpha *= opts.theta
                accepted = True
                break
            trace.append((j + 1, F_new, alpha, False))
            alpha /= opts.theta
            if alpha <= opts.eta2:
                break
        if not accepted:
            termination = STEP_TOLERANCE if alpha <= opts.eta2 else ITERATION_CAP
            break
        change = abs(F_new - F_cur)
        Z, c, F_cur = Z_new, c_new, F_new
        j += 1
        if callback is not None:
            callback(j, Z, c, F_cur)
        if change <= opts.eta1:
            termination = OBJECTIVE_TOLERANCE
            break
        if alpha <= opts.eta2:
            termination = STEP_TOLERANCE
            break
        try:
            _, S, T = value_and_grads(Z, c, ao)
        except SingularDesign as exc:
            raise SingularDesign(f"design became singular at iteration {j}") from exc
    if termination == ITERATION_CAP:
        log.warning("projected gradient descent stopped at the iteration cap (%d)", j)
    return OptimizationResult(Z, c, F_cur, trace, termination, j)
