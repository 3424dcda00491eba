"""Initialization, design-size selection and automatic bias-variance weights."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import (
    AllRunsFailed,
    InvalidInput,
    SingularConstraint,
    SmartDMError,
    ZeroSignal,
    ZeroSignalSum,
)
from .objective import ProblemSpec, assemble, objective_value
from .pgd import OptimizationResult, optimize

log = logging.getLogger(__name__)

SVD_RTOL = 1e-10


def repair_constraints(Z, c, spec):
    """Project ``Z`` and ``c`` onto ``Z A = B`` and ``C c = d``."""
    Z = np.array(Z, dtype=float)
    c = np.array(c, dtype=float)
    A, C = spec.A, spec.C
    if A.shape[1]:
        try:
            AtA_inv_At = linalg.solve(A.T @ A, A.T, assume_a="pos")
        except linalg.LinAlgError as exc:
            raise SingularConstraint("A^T A is singular") from exc
        Z = Z + (spec.B - Z @ A) @ AtA_inv_At
    if C.shape[0]:
        try:
            CCt = C @ C.T
            d = spec.d if c.ndim == 1 else spec.d.reshape(C.shape[0], -1)
            c = c + C.T @ linalg.solve(CCt, d - C @ c, assume_a="pos")
        except linalg.LinAlgError as exc:
            raise SingularConstraint("C C^T is singular") from exc
    return Z, c


def _orthonormal_fill(basis, count, rng):
    """``count`` unit vectors orthogonal to the columns of ``basis`` and to each other."""
    n = basis.shape[0]
    Q = linalg.orth(basis) if basis.size else np.zeros((n, 0))
    out = []
    while len(out) < count:
        v = rng.standard_normal(n)
        for _ in range(2):
            v -= Q @ (Q.T @ v)
        nv = np.linalg.norm(v)
        if nv < 1e-8:
            continue
        v /= nv
        out.append(v)
        Q = np.column_stack([Q, v])
    return np.column_stack(out) if out else np.zeros((n, 0))


def primary_column(models):
    """Least-squares compromise ``v`` among the scaled contrast columns ``s_i X_i c_i``.

    Minimizes ``sum_i |s_i X_i c_i - s_i v|^2`` with ``s_i = c_i^T snr_i``.
    """
    s = np.array([mdl.contrast_signal for mdl in models])
    denom = float(s @ s)
    if denom == 0.0:
        raise ZeroSignalSum("every model has zero contrast signal; the primary column is undefined")
    cols = np.column_stack([mdl.X @ mdl.c_X for mdl in models])
    return cols @ (s**2) / denom, cols, s


def init_design(spec, seed=0, perturb=0.0):
    """SVD-based feasible starting point ``(Z0, c0)``.

    The primary column is the compromise vector of :func:`primary_column`;
    the remaining columns are leading left singular vectors of the residual
    matrix, topped up with a seeded orthonormal complement when that matrix
    has too small a rank. ``perturb > 0`` adds seeded ``U(0, perturb)``
    noise to the non-primary columns before the constraints are imposed.
    """
    rng = np.random.default_rng(seed)
    v, cols, s = primary_column(spec.models)
    M = (cols - v[:, None]) * s
    n, p = spec.n, spec.p
    Z0 = np.empty((n, p))
    Z0[:, 0] = v
    if p > 1:
        U, sv, _ = np.linalg.svd(M, full_matrices=False)
        rank = int(np.sum(sv > SVD_RTOL * sv[0])) if sv.size and sv[0] > 0 else 0
        take = min(rank, p - 1)
        Z0[:, 1 : 1 + take] = U[:, :take]
        if take < p - 1:
            Z0[:, 1 + take :] = _orthonormal_fill(Z0[:, : 1 + take], p - 1 - take, rng)
        if perturb > 0:
            Z0[:, 1:] += rng.uniform(0.0, perturb, size=(n, p - 1))
    c0 = np.zeros(p)
    c0[0] = 1.0
    if spec.n_contrasts > 1:
        c0 = np.tile(c0[:, None], (1, spec.n_contrasts))
    return repair_constraints(Z0, c0, spec)


def phi_choice_A(k, model):
    """Weight giving the squared bias ``k`` times the emphasis of the variance term."""
    s = model.contrast_signal
    v = model.gauss_markov_variance()
    if s == 0.0 and k > 0:
        raise ZeroSignal("phi is zero for a model without contrast signal")
    return s * s / (s * s + k * v)


def phi_choice_B(k, model):
    """Weight giving the absolute bias ``k`` times the emphasis of the variance term."""
    s = model.contrast_signal
    if s == 0.0:
        raise ZeroSignal("phi is undefined for a model without contrast signal")
    v = model.gauss_markov_variance()
    a = 2.0 * v * v * k * k / (s * s)
    # same root as (-1 + sqrt(1 + 4a)) / (2a), without the cancellation at small a
    return 2.0 / (1.0 + np.sqrt(1.0 + 4.0 * a))


def apply_phi_rule(spec, k, rule="A", null_phi=0.5):
    """Return ``spec`` with every model's phi set by choice A or B.

    Models with zero contrast signal keep ``null_phi``.
    """
    fn = {"A": phi_choice_A, "B": phi_choice_B}[rule.upper()]
    phis = []
    for mdl in spec.models:
        if mdl.contrast_signal == 0.0:
            phis.append(null_phi)
        else:
            phis.append(min(max(fn(k, mdl), 1e-15), 1.0 - 1e-15))
    return spec.with_phi(phis)


@dataclass
class SizeSelectionReport:
    p_values: list
    objectives: list
    R: list
    p_opt: int
    cutoff: float
    degenerate: bool = False
    results: dict = None

    def rows(self):
        return list(zip(self.p_values, self.objectives, self.R))


def resize_spec(spec, p):
    """Copy of ``spec`` with ``p`` design columns.

    Constraint matrices are truncated or zero padded along the ``p`` axis;
    a contrast constraint of the form ``I c = e_1`` keeps that form.
    """
    A = spec.A
    qa = A.shape[1]
    if p < qa:
        raise InvalidInput(f"p={p} is smaller than the {qa} column constraints")
    A_new = np.zeros((p, qa))
    k = min(p, A.shape[0])
    A_new[:k] = A[:k]
    C = spec.C
    full_fix = C.shape[0] == spec.p and np.allclose(C, np.eye(spec.p))
    if full_fix:
        C_new = np.eye(p)
        d_old = spec.d
        d_new = np.zeros((p,) + d_old.shape[1:])
        k = min(p, d_old.shape[0])
        d_new[:k] = d_old[:k]
    else:
        C_new = np.zeros((C.shape[0], p))
        k = min(p, C.shape[1])
        C_new[:, :k] = C[:, :k]
        d_new = spec.d
    return ProblemSpec(spec.models, spec.n, p, A_new, spec.B, C_new, d_new,
                       spec.n_contrasts, spec.name, dict(spec.extra))


def _fully_determined(spec):
    return spec.A.shape[1] == spec.p


def run_for_size(spec, p, opts=None, seed=0, perturb=0.0, ao=None):
    """Optimize at ``p`` columns from a fresh ``p``-dependent initialization."""
    sp = resize_spec(spec, p)
    ao = assemble(sp) if ao is None else ao
    Z0, c0 = init_design(sp, seed=seed, perturb=perturb)
    if _fully_determined(sp) and sp.C.shape[0] == sp.p:
        return OptimizationResult(Z0, c0, objective_value(Z0, c0, ao), [], "FullyConstrained", 0)
    return optimize(ao, sp, Z0, c0, opts)


def select_size(spec, p0, p_max, cutoff=0.95, opts=None, seed=0, perturb=0.0):
    """Smallest ``p`` whose objective reduction reaches ``cutoff`` of the best.

    ``R(p) = (F_max - F(p)) / (F_max - F_min)``.
    """
    if p_max < p0:
        raise InvalidInput(f"p_max ({p_max}) must not be below p0 ({p0})")
    if p_max >= spec.n:
        raise InvalidInput(f"p_max must be below n={spec.n}")
    if not 0 < cutoff <= 1:
        raise InvalidInput("cutoff must lie in (0, 1]")
    ao = assemble(spec)
    p_values, F, results = [], [], {}
    for p in range(p0, p_max + 1):
        try:
            res = run_for_size(spec, p, opts, seed, perturb, ao)
        except SmartDMError as exc:
            log.warning("size %d failed: %s", p, exc)
            continue
        p_values.append(p)
        F.append(res.F_hat)
        results[p] = res
    if not p_values:
        raise AllRunsFailed("no size in the sweep produced a result")
    F_arr = np.array(F)
    f_max, f_min = F_arr.max(), F_arr.min()
    if f_max == f_min:
        return SizeSelectionReport(p_values, F, [1.0] * len(F), p_values[0], cutoff, True, results)
    R = (f_max - F_arr) / (f_max - f_min)
    j_hat = int(np.flatnonzero(R >= cutoff)[0])
    return SizeSelectionReport(p_values, F, R.tolist(), p_values[j_hat], cutoff, False, results)


def select_size_robust(spec, p0, p_max, cutoff=0.95, opts=None, n_iter=5, seed=0, perturb=1e-2):
    """Median (lower median for even counts) of :func:`select_size` over perturbed starts.

    Trial 0 uses the unperturbed initialization; later trials use seeds
    spawned from ``seed`` and ``U(0, perturb)`` noise on non-primary columns.
    """
    if n_iter < 1:
        raise InvalidInput("n_iter must be positive")
    seeds = np.random.SeedSequence(seed).generate_state(n_iter)
    picks, reports = [], []
    for j in range(n_iter):
        rep = select_size(spec, p0, p_max, cutoff, opts,
                          seed=int(seeds[j]) if j else seed, perturb=perturb if j else 0.0)
        picks.append(rep.p_opt)
        reports.append(rep)
    return lower_median(picks), reports


def lower_median(values):
    v = sorted(values)
    return v[(len(v) - 1) // 2]


def uniform_init(spec, seed=0):
    """Start with ``U(0, 1)`` entries in the columns left free by ``Z A = B``, then repair."""
    rng = np.random.default_rng(seed)
    Z0 = rng.uniform(0.0, 1.0, size=(spec.n, spec.p))
    c0 = np.zeros(spec.p)
    c0[0] = 1.0
    if spec.n_contrasts > 1:
        c0 = np.tile(c0[:, None], (1, spec.n_contrasts))
    return repair_constraints(Z0, c0, spec)


def initial_point(spec, seed=0):
    """Starting point named by ``spec.extra["init"]`` (``"svd"`` by default)."""
    kind = spec.extra.get("init", "svd")
    if kind == "uniform":
        return uniform_init(spec, seed)
    if kind == "svd":
        return init_design(spec, seed=seed)
    raise InvalidInput(f"unknown init strategy {kind!r}; use 'svd' or 'uniform'")
