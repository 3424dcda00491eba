"""Composite bias-variance objective over a family of candidate models.

The objective for a design ``Z`` and contrast ``c`` is

    G(Z, c) = c^T K c [sum_i 2 phi_i w_i + tr(P_Z H PhiV Sigma H^T)]
              + c^T K Z^T H PhiB H^T Z K c - 2 c^T K Z^T H PhiB ell + const

with ``K = (Z^T Z)^{-1}``. Products are grouped so that no ``n x n`` matrix
is ever formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import (
    DimensionMismatch,
    InconsistentDimensions,
    InvalidInput,
    NonPositiveDof,
    SingularConstraint,
    SingularDesign,
)
from .glm import CandidateModel, gram_inverse


def _as_matrix(a, shape, name):
    if a is None:
        return np.zeros(shape)
    a = np.array(a, dtype=float)
    if a.size == 0:
        return np.zeros(shape)
    if a.ndim == 1 and len(shape) == 2 and shape[1] == 1:
        a = a[:, None]
    if a.shape != shape:
        raise InconsistentDimensions(f"{name} must have shape {shape}, got {a.shape}")
    return a


@dataclass(frozen=True)
class ProblemSpec:
    """A complete design-optimization instance.

    Constraints are ``Z A = B`` on the design and ``C c = d`` on every
    contrast. Empty ``A``/``C`` mean the corresponding variable is free.
    """

    models: tuple
    n: int
    p: int
    A: np.ndarray = None
    B: np.ndarray = None
    C: np.ndarray = None
    d: np.ndarray = None
    n_contrasts: int = 1
    name: str = ""
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        models = tuple(self.models)
        if not models:
            raise InvalidInput("a problem needs at least one candidate model")
        for i, mdl in enumerate(models):
            if not isinstance(mdl, CandidateModel):
                raise InvalidInput(f"models[{i}] is not a CandidateModel")
            if mdl.n != self.n:
                raise InconsistentDimensions(f"models[{i}] has {mdl.n} rows, expected n={self.n}")
        n, p = int(self.n), int(self.p)
        if not 0 < p < n:
            raise InconsistentDimensions(f"need 0 < p < n, got p={p}, n={n}")
        A = np.array(self.A, dtype=float) if self.A is not None else np.zeros((p, 0))
        if A.size == 0:
            A = np.zeros((p, 0))
        if A.ndim == 1:
            A = A[:, None]
        if A.shape[0] != p:
            raise InconsistentDimensions(f"A must have {p} rows, got shape {A.shape}")
        qa = A.shape[1]
        B = _as_matrix(self.B, (n, qa), "B")
        C = np.array(self.C, dtype=float) if self.C is not None else np.zeros((0, p))
        if C.size == 0:
            C = np.zeros((0, p))
        if C.ndim == 1:
            C = C[None, :]
        if C.shape[1] != p:
            raise InconsistentDimensions(f"C must have {p} columns, got shape {C.shape}")
        r = C.shape[0]
        q = int(self.n_contrasts)
        if q < 1:
            raise InvalidInput("n_contrasts must be at least 1")
        d = np.array(self.d, dtype=float) if self.d is not None else np.zeros(r)
        if d.size == 0:
            d = np.zeros(r) if q == 1 else np.zeros((r, q))
        if d.ndim == 2 and q == 1 and d.shape[1] == 1:
            d = d[:, 0]
        if d.shape not in ((r,), (r, q)):
            raise InconsistentDimensions(f"d must have shape ({r},) or ({r}, {q}), got {d.shape}")
        if qa > p or r > p:
            raise InconsistentDimensions("more constraints than columns")
        if qa and np.linalg.matrix_rank(A) < qa:
            raise SingularConstraint("A must have full column rank")
        if r and np.linalg.matrix_rank(C) < r:
            raise SingularConstraint("C must have full row rank")
        for mdl in models:
            if n - mdl.p <= 0:
                raise NonPositiveDof(f"n - p_i must be positive, model has p_i={mdl.p}")
        for a in (A, B, C, d):
            a.flags.writeable = False
        object.__setattr__(self, "models", models)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "n_contrasts", q)

    @property
    def m(self):
        return len(self.models)

    def d_for(self, s):
        """Right-hand side of the contrast constraint for contrast ``s``."""
        return self.d if self.d.ndim == 1 else self.d[:, s]

    def with_models(self, models):
        return ProblemSpec(models, self.n, self.p, self.A, self.B, self.C, self.d,
                           self.n_contrasts, self.name, dict(self.extra))

    def with_phi(self, phis):
        phis = np.broadcast_to(np.asarray(phis, dtype=float), (self.m,))
        return self.with_models([mdl.replace(phi=float(ph)) for mdl, ph in zip(self.models, phis)])


@dataclass(frozen=True)
class AssembledObjective:
    """Precomputed quantities of the composite objective.

    ``H[:, i] = sqrt(w_i) X_i snr_i``, ``sigma[i] = 1/(n - p_i)``,
    ``ell[i] = sqrt(w_i) c_Xi^T snr_i``, ``phi_v = 2 phi``, ``phi_b = 2 - 2 phi``.
    """

    H: np.ndarray
    sigma: np.ndarray
    ell: np.ndarray
    phi_v: np.ndarray
    phi_b: np.ndarray
    phiw_sum: float
    const_term: float
    h_norm2: np.ndarray
    h_phib_ell: np.ndarray

    @property
    def n(self):
        return self.H.shape[0]

    @property
    def m(self):
        return self.H.shape[1]

    @property
    def Sigma(self):
        return np.diag(self.sigma)

    @property
    def PhiV(self):
        return np.diag(self.phi_v)

    @property
    def PhiB(self):
        return np.diag(self.phi_b)


def assemble(spec):
    """Build the :class:`AssembledObjective` for ``spec``."""
    models = spec.models
    n = spec.n
    m = len(models)
    H = np.empty((n, m))
    sigma = np.empty(m)
    ell = np.empty(m)
    phi = np.empty(m)
    w = np.empty(m)
    s = np.empty(m)
    for i, mdl in enumerate(models):
        if mdl.n != n:
            raise InconsistentDimensions(f"model {i} has {mdl.n} rows, expected {n}")
        dof = n - mdl.p
        if dof <= 0:
            raise NonPositiveDof(f"model {i}: n - p_i = {dof}")
        rw = np.sqrt(mdl.w)
        H[:, i] = rw * mdl.signal
        sigma[i] = 1.0 / dof
        s[i] = mdl.contrast_signal
        ell[i] = rw * s[i]
        phi[i] = mdl.phi
        w[i] = mdl.w
    phi_v = 2.0 * phi
    phi_b = 2.0 - 2.0 * phi
    arrays = dict(
        H=H,
        sigma=sigma,
        ell=ell,
        phi_v=phi_v,
        phi_b=phi_b,
        h_norm2=np.einsum("ij,ij->j", H, H),
        h_phib_ell=H @ (phi_b * ell),
    )
    for a in arrays.values():
        a.flags.writeable = False
    return AssembledObjective(
        phiw_sum=float(np.sum(phi_v * w)),
        const_term=float(np.sum(w * phi_b * s**2)),
        **arrays,
    )


def _contrast_columns(c, p):
    c = np.asarray(c, dtype=float)
    if c.ndim == 1:
        if c.shape[0] != p:
            raise DimensionMismatch(f"contrast length {c.shape[0]} != p={p}")
        return c[:, None], True
    if c.ndim == 2 and c.shape[0] == p:
        return c, False
    raise DimensionMismatch(f"contrast must have shape ({p},) or ({p}, q), got {c.shape}")


class _Terms:
    """Design-dependent pieces shared by the value and both gradients."""

    def __init__(self, Z, ao):
        Z = np.asarray(Z, dtype=float)
        if Z.ndim != 2 or Z.shape[0] != ao.n:
            raise DimensionMismatch(f"Z must have {ao.n} rows, got shape {Z.shape}")
        self.Z = Z
        self.K = gram_inverse(Z)
        self.W = Z.T @ ao.H
        KW = self.K @ self.W
        dv = ao.phi_v * ao.sigma
        self.dv = dv
        # tr(P_Z H PhiV Sigma H^T) = sum_i dv_i (|h_i|^2 - W_i^T K W_i)
        self.trace = float(dv @ ao.h_norm2 - np.einsum("ij,ij,j->", self.W, KW, dv))
        self.scale = ao.phiw_sum + self.trace
        self.M = (self.W * ao.phi_b) @ self.W.T
        self.w_phib_ell = self.W @ (ao.phi_b * ao.ell)


def _value_one(t, ao, c):
    Kc = t.K @ c
    return float((c @ Kc) * t.scale + Kc @ t.M @ Kc - 2.0 * Kc @ t.w_phib_ell + ao.const_term)


def objective_value(Z, c, ao):
    """Evaluate the composite objective (summed over contrasts for a ``(p, q)`` array)."""
    t = _Terms(Z, ao)
    cols, _ = _contrast_columns(c, t.Z.shape[1])
    return sum(_value_one(t, ao, cols[:, s]) for s in range(cols.shape[1]))


def _grad_z_one(t, ao, c):
    Z, K = t.Z, t.K
    ZK = Z @ K
    Kc = K @ c
    ZKc = Z @ Kc
    cKc = float(c @ Kc)
    KMKc = K @ (t.M @ Kc)
    H = ao.H
    term1 = -2.0 * t.scale * np.outer(ZKc, Kc)
    # P_Z H D H^T Z K = (H - Z K W) D W^T K
    DWtK = (t.dv[:, None] * t.W.T) @ K
    term2 = -2.0 * cKc * (H @ DWtK - ZK @ (t.W @ DWtK))
    term3 = -2.0 * np.outer(ZKc, KMKc)
    term4 = -2.0 * np.outer(ZK @ (t.M @ Kc), Kc)
    term5 = 2.0 * np.outer(H @ (ao.phi_b * (t.W.T @ Kc)), Kc)
    term6 = 2.0 * np.outer(ZK @ t.w_phib_ell, Kc)
    term7 = 2.0 * np.outer(ZKc, K @ t.w_phib_ell)
    term8 = -2.0 * np.outer(ao.h_phib_ell, Kc)
    return term1 + term2 + term3 + term4 + term5 + term6 + term7 + term8


def _grad_c_one(t, ao, c):
    Kc = t.K @ c
    return 2.0 * t.scale * Kc + 2.0 * t.K @ (t.M @ Kc) - 2.0 * t.K @ t.w_phib_ell


def grad_Z(Z, c, ao):
    """Gradient of the objective with respect to the design (``n x p``)."""
    t = _Terms(Z, ao)
    cols, _ = _contrast_columns(c, t.Z.shape[1])
    return sum(_grad_z_one(t, ao, cols[:, s]) for s in range(cols.shape[1]))


def grad_contrast(Z, c, ao):
    """Gradient with respect to the contrast; same shape as ``c``."""
    t = _Terms(Z, ao)
    cols, single = _contrast_columns(c, t.Z.shape[1])
    g = np.column_stack([_grad_c_one(t, ao, cols[:, s]) for s in range(cols.shape[1])])
    return g[:, 0] if single else g


def value_and_grads(Z, c, ao):
    """Objective value together with both gradients, sharing one factorization."""
    t = _Terms(Z, ao)
    cols, single = _contrast_columns(c, t.Z.shape[1])
    val = 0.0
    gz = np.zeros_like(t.Z)
    gc = np.empty_like(cols)
    for s in range(cols.shape[1]):
        cs = cols[:, s]
        val += _value_one(t, ao, cs)
        gz += _grad_z_one(t, ao, cs)
        gc[:, s] = _grad_c_one(t, ao, cs)
    return val, gz, (gc[:, 0] if single else gc)


def optimal_contrast(Z, ao):
    """Unconstrained minimizer of the objective in the contrast for fixed ``Z``."""
    t = _Terms(Z, ao)
    lhs = t.scale * t.K + t.K @ t.M @ t.K
    rhs = t.K @ t.w_phib_ell
    try:
        return linalg.solve(lhs, rhs, assume_a="sym")
    except linalg.LinAlgError as exc:
        raise SingularDesign("contrast normal equations are singular") from exc


def per_model_value(Z, c_Z, model, n=None, form="raw"):
    """Weighted bias-variance value of a single candidate model.

    ``form="raw"`` evaluates the expanded expression term by term;
    ``form="rewritten"`` evaluates the same quantity through the contrast
    bias and contrast variance change. Both use ``n - p_i`` as the
    residual degrees of freedom. The frequency weight ``w`` is not applied.
    """
    from . import glm

    Z = np.asarray(Z, dtype=float)
    c_Z = np.asarray(c_Z, dtype=float)
    n = Z.shape[0] if n is None else int(n)
    if n != Z.shape[0] or n != model.n:
        raise DimensionMismatch("row counts of Z, model and n disagree")
    dof = n - model.p
    phi = model.phi
    if form == "raw":
        K = gram_inverse(Z)
        h = model.signal
        g = Z.T @ h
        cKc = float(c_Z @ K @ c_Z)
        resid = float(h @ h - g @ K @ g)
        proj = float(c_Z @ K @ g)
        s = model.contrast_signal
        variance = cKc * (1.0 + resid / dof)
        bias = proj**2 - 2.0 * proj * s + s**2
        return 2.0 * phi * variance + (2.0 - 2.0 * phi) * bias
    if form == "rewritten":
        gm = model.gauss_markov_variance()
        cv = glm.contrast_variance_change(Z, c_Z, model, dof=dof)
        cb = glm.contrast_bias(Z, c_Z, model)
        s = model.contrast_signal
        scaled_bias = s * cb if s != 0.0 else cb
        return 2.0 * phi * gm * (cv + 1.0) + (2.0 - 2.0 * phi) * scaled_bias**2
    raise InvalidInput(f"unknown form {form!r}")


def objective_sum_form(Z, c, spec):
    """``sum_i w_i f_i`` evaluated model by model (reference implementation)."""
    cols, _ = _contrast_columns(c, np.asarray(Z).shape[1])
    total = 0.0
    for s in range(cols.shape[1]):
        for mdl in spec.models:
            total += mdl.w * per_model_value(Z, cols[:, s], mdl)
    return total
