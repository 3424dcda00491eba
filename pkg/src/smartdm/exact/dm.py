"""Design-optimization problems posed for the exact solver."""

from __future__ import annotations

import numpy as np

from ..errors import SingularDesign, SolverFailure
from ..objective import assemble, objective_value, value_and_grads
from ..pgd import OptimizationResult, _well_conditioned
from .problem import NlpProblem
from .solver import SolverOptions, outer_loop


def _layout(spec):
    n, p, q = spec.n, spec.p, spec.n_contrasts
    nz = n * p

    def unpack(x):
        Z = x[:nz].reshape(n, p)
        c = x[nz:].reshape(p, q)
        return Z, (c[:, 0] if q == 1 else c)

    def pack(Z, c):
        return np.concatenate([np.asarray(Z, dtype=float).ravel(),
                               np.asarray(c, dtype=float).reshape(p, q).ravel()])

    return unpack, pack


def dm_nlp(spec, ao=None):
    """The design problem as an :class:`NlpProblem` over ``[vec(Z), vec(c)]``.

    ``Z`` is stored row-major, so the constraint block for ``Z A = B`` is
    ``kron(I_n, A^T)``; the contrast block for ``C c = d`` is ``kron(C, I_q)``.
    Ill-conditioned trial designs evaluate to ``+inf``.
    """
    ao = assemble(spec) if ao is None else ao
    unpack, pack = _layout(spec)
    n, p, q = spec.n, spec.p, spec.n_contrasts
    A, C = spec.A, spec.C
    d = spec.d.reshape(C.shape[0], q) if C.shape[0] else np.zeros((0, q))
    dim = n * p + p * q
    Jz = np.kron(np.eye(n), A.T)
    Jc = np.kron(C, np.eye(q))
    J = np.zeros((Jz.shape[0] + Jc.shape[0], dim))
    J[: Jz.shape[0], : n * p] = Jz
    J[Jz.shape[0]:, n * p:] = Jc

    def f(x):
        Z, c = unpack(x)
        if not _well_conditioned(Z):
            return np.inf
        try:
            return objective_value(Z, c, ao)
        except SingularDesign:
            return np.inf

    def grad(x):
        Z, c = unpack(x)
        _, S, T = value_and_grads(Z, c, ao)
        return pack(S, T)

    def cons(x):
        Z, c = unpack(x)
        c2 = np.asarray(c).reshape(p, q)
        return np.concatenate([(Z @ A - spec.B).ravel(), (C @ c2 - d).ravel()])

    problem = NlpProblem(dim, f, grad, cons, lambda x: J,
                         eq_hessp=lambda x, w, v: np.zeros(dim), name=spec.name or "design")
    return problem, pack, unpack


def solve_dm_problem(spec, assembled=None, init=None, options=None):
    """Minimize the design objective with the augmented Lagrangian solver.

    Parameters
    ----------
    spec : ProblemSpec
    assembled : AssembledObjective, optional
    init : (Z0, c0), optional
        Defaults to the SVD initialization.
    options : SolverOptions, optional
        Defaults to exact Hessian-vector products from differenced gradients.

    Returns
    -------
    OptimizationResult
        ``info`` holds the multipliers, penalty, constraint violation and
        KKT residual. The trace rows carry the trust radius as the step.
    """
    if init is None:
        from ..selection import init_design

        init = init_design(spec)
    options = SolverOptions(hessian="exact") if options is None else options
    ao = assemble(spec) if assembled is None else assembled
    problem, pack, unpack = dm_nlp(spec, ao)
    x0 = pack(*init)
    try:
        sol = outer_loop(problem, x0, options)
        termination = "Converged"
    except SolverFailure as exc:
        if exc.result is None:
            raise
        sol = exc.result
        termination = type(exc).__name__
    Z, c = unpack(sol.x)
    F0 = objective_value(*init, ao)
    trace = [(0, F0, 0.0, True)] + list(sol.trace)
    info = {"lambda": sol.lam, "mu": sol.mu, "constraint_violation": sol.constraint_violation,
            "kkt": sol.kkt, "outer_iterations": sol.outer_iterations, "converged": sol.converged}
    return OptimizationResult(Z.copy(), np.array(c, dtype=float), float(objective_value(Z, c, ao)),
                              trace, termination, sol.inner_iterations, info)
