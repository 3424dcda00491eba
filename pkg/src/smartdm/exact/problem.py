"""Problem container and the merit function for the augmented Lagrangian solver."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import CallbackFailure, InconsistentDimensions, InvalidInput


@dataclass
class NlpProblem:
    """``min f(x)`` s.t. ``c(x) = 0``, ``g(x) >= 0``, ``lower <= x <= upper``.

    Parameters
    ----------
    dim : int
    objective, gradient : callable
        ``x -> float`` and ``x -> (dim,)``.
    eq_constraints, eq_jacobian : callable, optional
        ``x -> (m,)`` and ``x -> (m, dim)``.
    ineq_constraints, ineq_jacobian : callable, optional
        Same shapes for inequalities.
    lower, upper : array_like, optional
        Bounds; entries may be infinite.
    hessp : callable, optional
        ``(x, v) -> H_f(x) v``. Finite differences of ``gradient`` are used
        when it is missing and an exact Hessian is requested.
    eq_hessp : callable, optional
        ``(x, w, v) -> sum_i w_i H_{c_i}(x) v``.
    """

    dim: int
    objective: object
    gradient: object
    eq_constraints: object = None
    eq_jacobian: object = None
    ineq_constraints: object = None
    ineq_jacobian: object = None
    lower: np.ndarray = None
    upper: np.ndarray = None
    hessp: object = None
    eq_hessp: object = None
    name: str = ""

    def __post_init__(self):
        self.dim = int(self.dim)
        if self.dim < 1:
            raise InvalidInput("dim must be positive")
        lo = np.full(self.dim, -np.inf) if self.lower is None else np.array(self.lower, dtype=float)
        hi = np.full(self.dim, np.inf) if self.upper is None else np.array(self.upper, dtype=float)
        if lo.shape != (self.dim,) or hi.shape != (self.dim,):
            raise InconsistentDimensions("bounds must have length dim")
        if np.any(lo > hi):
            raise InvalidInput("lower bound exceeds upper bound")
        self.lower, self.upper = lo, hi
        if (self.eq_constraints is None) != (self.eq_jacobian is None):
            raise InvalidInput("equality constraints need both values and a Jacobian")
        if (self.ineq_constraints is None) != (self.ineq_jacobian is None):
            raise InvalidInput("inequality constraints need both values and a Jacobian")

    @property
    def has_inequalities(self):
        return self.ineq_constraints is not None

    def constraints(self, x):
        if self.eq_constraints is None:
            return np.zeros(0)
        return np.atleast_1d(np.asarray(_call(self.eq_constraints, x), dtype=float))

    def jacobian(self, x):
        if self.eq_jacobian is None:
            return np.zeros((0, self.dim))
        J = np.atleast_2d(np.asarray(_call(self.eq_jacobian, x), dtype=float))
        if J.shape[1] != self.dim:
            raise InconsistentDimensions(f"Jacobian has {J.shape[1]} columns, expected {self.dim}")
        return J


def _call(fn, *args):
    try:
        return fn(*args)
    except (ArithmeticError, ValueError, TypeError, np.linalg.LinAlgError) as exc:
        raise CallbackFailure(f"callback {getattr(fn, '__name__', fn)} failed: {exc}") from exc


def slack_transform(problem):
    """Turn ``g(x) >= 0`` into ``g(x) - s = 0`` with ``s >= 0``.

    The variable vector becomes ``[x, s]``. Problems without inequalities
    are returned unchanged.
    """
    if not problem.has_inequalities:
        return problem
    n = problem.dim
    x0 = np.zeros(n)
    x0 = np.clip(x0, problem.lower, problem.upper)
    L = np.atleast_1d(np.asarray(problem.ineq_constraints(x0))).size

    def split(z):
        return z[:n], z[n:]

    def f(z):
        return problem.objective(split(z)[0])

    def grad(z):
        return np.concatenate([problem.gradient(split(z)[0]), np.zeros(L)])

    def ceq(z):
        x, s = split(z)
        g = np.atleast_1d(np.asarray(problem.ineq_constraints(x), dtype=float))
        return np.concatenate([problem.constraints(x), g - s])

    def jac(z):
        x, _ = split(z)
        Je = problem.jacobian(x)
        Jg = np.atleast_2d(np.asarray(problem.ineq_jacobian(x), dtype=float))
        top = np.hstack([Je, np.zeros((Je.shape[0], L))])
        bottom = np.hstack([Jg, -np.eye(L)])
        return np.vstack([top, bottom])

    hessp = None
    if problem.hessp is not None:
        def hessp(z, v):
            return np.concatenate([problem.hessp(split(z)[0], v[:n]), np.zeros(L)])

    return NlpProblem(
        n + L, f, grad, ceq, jac,
        lower=np.concatenate([problem.lower, np.zeros(L)]),
        upper=np.concatenate([problem.upper, np.full(L, np.inf)]),
        hessp=hessp, name=problem.name,
    )


def box_projection(z, lower, upper):
    """Clamp ``z`` elementwise to ``[lower, upper]``."""
    return np.minimum(np.maximum(z, lower), upper)


def kkt_residual(x, grad_L, lower, upper):
    """Projected-gradient stationarity measure ``|x - P(x - grad_L)|_inf``."""
    r = x - box_projection(x - grad_L, lower, upper)
    return float(np.max(np.abs(r))) if r.size else 0.0


def augmented_lagrangian(x, lam, mu, problem):
    """Value and gradient of ``f - lam^T c + mu/2 |c|^2``."""
    f = float(_call(problem.objective, x))
    g = np.asarray(_call(problem.gradient, x), dtype=float)
    c = problem.constraints(x)
    if c.size == 0:
        return f, g
    J = problem.jacobian(x)
    value = f - lam @ c + 0.5 * mu * (c @ c)
    return value, g - J.T @ (lam - mu * c)
