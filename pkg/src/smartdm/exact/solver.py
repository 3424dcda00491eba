"""Augmented Lagrangian outer loop with a trust-region gradient-projection inner solver."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from ..errors import InnerSolveFailure, InvalidInput, MaxOuterIterations
from .problem import _call, augmented_lagrangian, box_projection, kkt_residual, slack_transform
from .quasi_newton import HISTORY, make_approx
from .trust_region import cauchy_point, modified_cholesky, steihaug_cg, trust_region_update

log = logging.getLogger(__name__)

HESSIAN_KINDS = ("sr1", "bfgs", "lsr1", "lbfgs", "exact")
ROUNDOFF_GUARD = 1e-10


@dataclass(frozen=True)
class SolverOptions:
    """Tuning knobs of the exact solver.

    ``cg_tol`` overrides the relative CG stopping rule with an absolute
    residual tolerance. ``max_cauchy_segments`` caps the breakpoints visited
    per Cauchy search (``None`` caps only operator-valued Hessians, at 50).
    """

    mu0: float = 10.0
    theta_h: float = 10.0
    theta_l: float = 0.5
    eta_accept: float = 0.1
    radius0: float = 1.0
    eta_con_target: float = 1e-6
    eta_grad_target: float = 1e-6
    max_outer: int = 100
    max_inner: int = 500
    max_penalty_decreases: int = 10
    hessian: str = "sr1"
    history: int = HISTORY
    precondition: bool = False
    cg_tol: float = None
    max_cauchy_segments: int = None
    min_radius: float = 1e-14

    def __post_init__(self):
        if self.hessian not in HESSIAN_KINDS:
            raise InvalidInput(f"hessian must be one of {HESSIAN_KINDS}, got {self.hessian!r}")
        if self.mu0 <= 0 or self.theta_h <= 1 or not 0 < self.theta_l < 1:
            raise InvalidInput("need mu0 > 0, theta_h > 1 and 0 < theta_l < 1")
        if not 0 < self.eta_accept < 1 or self.radius0 <= 0:
            raise InvalidInput("need 0 < eta_accept < 1 and radius0 > 0")


@dataclass
class SolverState:
    x: np.ndarray
    lam: np.ndarray
    mu: float
    trust_radius: float
    hessian_approx: object
    eta_con: float
    eta_grad: float
    inner_total: int = 0
    trace: list = field(default_factory=list)


@dataclass
class ExactSolution:
    """Outcome of :func:`outer_loop`; ``x`` excludes slack variables."""

    x: np.ndarray
    lam: np.ndarray
    mu: float
    f: float
    constraint_violation: float
    kkt: float
    converged: bool
    outer_iterations: int
    inner_iterations: int
    slack: np.ndarray = None
    trace: list = field(default_factory=list)
    history: list = field(default_factory=list)


class _Point:
    """Objective, constraints and merit function evaluated at one point."""

    def __init__(self, x, lam, mu, problem):
        self.x = x
        self.f = float(_call(problem.objective, x))
        self.c = problem.constraints(x)
        if not np.isfinite(self.f):
            self.L = np.inf
            return
        self.L, self.gL = augmented_lagrangian(x, lam, mu, problem)
        self.J = problem.jacobian(x)


def _fd_hessp(grad, x, v):
    vn = np.max(np.abs(v))
    if vn == 0:
        return np.zeros_like(v)
    h = 6e-6 * max(1.0, np.max(np.abs(x))) / vn
    return (np.asarray(grad(x + h * v)) - np.asarray(grad(x - h * v))) / (2 * h)


class _Model:
    """Hessian of the merit function at a point: exact or structured quasi-Newton.

    The quasi-Newton matrix approximates the curvature of ``f - w^T c``;
    the penalty part ``mu J^T J`` is added exactly.
    """

    def __init__(self, pt, state, problem, options):
        self.pt, self.mu, self.problem = pt, state.mu, problem
        self.qn = state.hessian_approx
        self.w = state.lam - state.mu * pt.c
        self.exact = options.hessian == "exact"
        self.cheap_columns = not self.exact

    def matvec(self, v):
        J, x = self.pt.J, self.pt.x
        if self.exact:
            pb = self.problem
            out = _call(pb.hessp, x, v) if pb.hessp is not None else _call(_fd_hessp, pb.gradient, x, v)
            if J.shape[0]:
                if pb.eq_hessp is not None:
                    out = out - _call(pb.eq_hessp, x, self.w, v)
                else:
                    out = out - _fd_hessp(lambda z: pb.jacobian(z).T @ self.w, x, v)
        else:
            out = self.qn.matvec(v)
        if J.shape[0]:
            out = out + self.mu * (J.T @ (J @ v))
        return out

    def column(self, i):
        if self.exact:
            e = np.zeros(self.pt.x.size)
            e[i] = 1.0
            return self.matvec(e)
        col = np.array(self.qn.column(i), dtype=float)
        J = self.pt.J
        if J.shape[0]:
            col += self.mu * (J.T @ J[:, i])
        return col


def _reduced_preconditioner(model, free):
    idx = np.flatnonzero(free)
    Bt = np.column_stack([model.column(i)[idx] for i in idx])
    (cf, _tau) = modified_cholesky(0.5 * (Bt + Bt.T))
    return lambda r: linalg.cho_solve(cf, r)


def inner_solve(state, problem, options):
    """Approximately minimize the merit function over the bounds.

    Returns the updated state and ``True`` when the projected-gradient
    residual reached ``state.eta_grad`` within ``options.max_inner`` steps.
    """
    lo_b, hi_b = problem.lower, problem.upper
    pt = _Point(state.x, state.lam, state.mu, problem)
    if kkt_residual(pt.x, pt.gL, lo_b, hi_b) <= state.eta_grad:
        return state, True
    cap = options.max_cauchy_segments
    for _ in range(options.max_inner):
        radius = state.trust_radius
        x = pt.x
        lo = np.maximum(lo_b - x, -radius)
        hi = np.minimum(hi_b - x, radius)
        model = _Model(pt, state, problem, options)
        seg_cap = cap if cap is not None else (None if model.cheap_columns else 50)
        p_c, _ = cauchy_point(pt.gL, model.matvec, model.column, lo, hi, seg_cap)
        free = (p_c > lo) & (p_c < hi)
        p = p_c.copy()
        if free.any():
            gt = (pt.gL + model.matvec(p_c))[free]
            gn = np.linalg.norm(gt)
            tol = options.cg_tol if options.cg_tol is not None else min(0.5, np.sqrt(gn)) * gn

            def red_matvec(v, free=free):
                full = np.zeros(x.size)
                full[free] = v
                return model.matvec(full)[free]

            precond = _reduced_preconditioner(model, free) if options.precondition else None
            v, status, _ = steihaug_cg(gt, red_matvec, (lo - p_c)[free], (hi - p_c)[free], tol,
                                       precond=precond)
            p[free] += v
        pred = -(pt.gL @ p + 0.5 * p @ model.matvec(p))
        x_trial = box_projection(x + p, lo_b, hi_b)
        trial = _Point(x_trial, state.lam, state.mu, problem)
        if not np.isfinite(trial.L) or pred <= 0:
            rho = -np.inf
        else:
            actual = pt.L - trial.L
            if pred < ROUNDOFF_GUARD * max(1.0, abs(pt.L)):
                # differences of L are lost in roundoff; integrate the gradient instead
                actual = -0.5 * (pt.gL + trial.gL) @ (x_trial - x)
            rho = actual / pred
        accepted = rho > options.eta_accept
        if not model.exact and np.isfinite(trial.L):
            s = x_trial - x
            y = trial.gL - pt.gL
            if trial.J.shape[0]:
                y = y - state.mu * (trial.J.T @ (trial.J @ s))
            state.hessian_approx.update(s, y)
        state.inner_total += 1
        state.trace.append((state.inner_total, trial.f if accepted else pt.f, radius, bool(accepted)))
        if accepted:
            pt = trial
        state.trust_radius = trust_region_update(rho, p, radius)
        state.x = pt.x
        if kkt_residual(pt.x, pt.gL, lo_b, hi_b) <= state.eta_grad:
            return state, True
        if state.trust_radius < options.min_radius:
            break
    state.x = pt.x
    return state, False


def outer_loop(problem, x0, options=None, lam0=None):
    """Solve ``problem`` from ``x0`` with the augmented Lagrangian method.

    Inequalities are handled through :func:`slack_transform`. Raises
    :class:`MaxOuterIterations` or :class:`InnerSolveFailure`; the partial
    :class:`ExactSolution` is attached to the exception as ``result``.
    """
    options = SolverOptions() if options is None else options
    n_orig = problem.dim
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (n_orig,):
        raise InvalidInput(f"x0 must have shape ({n_orig},)")
    pb = slack_transform(problem)
    if pb is not problem:
        g0 = np.atleast_1d(np.asarray(problem.ineq_constraints(x0), dtype=float))
        x0 = np.concatenate([x0, np.maximum(g0, 0.0)])
    x0 = box_projection(x0, pb.lower, pb.upper)
    m = pb.constraints(x0).size
    lam = np.zeros(m) if lam0 is None else np.array(lam0, dtype=float)
    mu = options.mu0
    con_floor = options.eta_con_target
    grad_floor = 0.1 * options.eta_grad_target
    kind = "sr1" if options.hessian == "exact" else options.hessian
    state = SolverState(x0, lam, mu, options.radius0,
                        None if options.hessian == "exact" else make_approx(kind, pb.dim, history=options.history),
                        mu ** -0.1, 1.0 / mu)
    history = []

    def report(converged, kkt0, cn, k):
        x = state.x
        return ExactSolution(
            x[:n_orig].copy(), state.lam.copy(), state.mu, float(pb.objective(x)), cn, kkt0,
            converged, k, state.inner_total, x[n_orig:].copy() if pb.dim > n_orig else None,
            state.trace, history,
        )

    for k in range(options.max_outer):
        failures = 0
        while True:
            state, found = inner_solve(state, pb, options)
            if found:
                break
            failures += 1
            if failures > options.max_penalty_decreases:
                c = pb.constraints(state.x)
                raise InnerSolveFailure(
                    f"inner solve failed {failures} times in a row at outer iteration {k}",
                    report(False, np.nan, float(np.max(np.abs(c), initial=0.0)), k),
                )
            state.mu *= options.theta_l
            state.eta_con = max(state.mu ** -0.1, con_floor)
            state.eta_grad = max(1.0 / state.mu, grad_floor)
        c = pb.constraints(state.x)
        cn = float(np.max(np.abs(c), initial=0.0))
        _, g0 = augmented_lagrangian(state.x, state.lam, 0.0, pb)
        kkt0 = kkt_residual(state.x, g0, pb.lower, pb.upper)
        history.append((k, cn, kkt0, state.mu))
        if cn <= state.eta_con:
            if cn <= options.eta_con_target and kkt0 <= options.eta_grad_target:
                return report(True, kkt0, cn, k + 1)
            state.lam = state.lam - state.mu * c
            state.eta_con = max(state.eta_con / state.mu ** 0.9, con_floor)
            state.eta_grad = max(state.eta_grad / state.mu, grad_floor)
        else:
            state.mu *= options.theta_h
            state.eta_con = max(state.mu ** -0.1, con_floor)
            state.eta_grad = max(1.0 / state.mu, grad_floor)
    c = pb.constraints(state.x)
    cn = float(np.max(np.abs(c), initial=0.0))
    _, g0 = augmented_lagrangian(state.x, state.lam, 0.0, pb)
    raise MaxOuterIterations(
        f"no convergence after {options.max_outer} outer iterations",
        report(False, kkt_residual(state.x, g0, pb.lower, pb.upper), cn, options.max_outer),
    )
