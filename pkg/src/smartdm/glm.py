"""GLM fitting primitives and analytic performance measures of a design.

Every measure is expressed in SNR units: the noise standard deviation is
taken as 1 and the true coefficients are the model's ``snr`` vector. All
functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import (
    DimensionMismatch,
    InvalidInput,
    SingularDesign,
    ZeroGaussMarkovVariance,
    ZeroResidualVariance,
)

RANK_RTOL = 1e-10


def _frozen(a, ndim=None, name="array"):
    a = np.array(a, dtype=float)
    if ndim is not None and a.ndim != ndim:
        raise DimensionMismatch(f"{name} must be {ndim}-dimensional, got shape {a.shape}")
    a.flags.writeable = False
    return a


def check_full_column_rank(M, name="Z"):
    """Raise SingularDesign unless ``M`` has full column rank.

    Full rank means the smallest singular value exceeds ``RANK_RTOL`` times
    the largest.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[1] == 0:
        raise DimensionMismatch(f"{name} must be a non-empty matrix, got shape {M.shape}")
    if M.shape[0] < M.shape[1]:
        raise SingularDesign(f"{name} has more columns ({M.shape[1]}) than rows ({M.shape[0]})")
    s = np.linalg.svd(M, compute_uv=False)
    if not np.all(np.isfinite(s)) or s[-1] <= RANK_RTOL * s[0]:
        raise SingularDesign(f"{name} is rank deficient (singular values {s[0]:.3g} .. {s[-1]:.3g})")


def gram_inverse(Z):
    """Return ``(Z^T Z)^{-1}`` via a Cholesky factorization."""
    Z = np.asarray(Z, dtype=float)
    G = Z.T @ Z
    try:
        cf = linalg.cho_factor(G, lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SingularDesign("Z^T Z is not positive definite") from exc
    K = linalg.cho_solve(cf, np.eye(G.shape[0]))
    return 0.5 * (K + K.T)


@dataclass(frozen=True)
class CandidateModel:
    """One anticipated true design with its effect size and weights.

    Parameters
    ----------
    X : (n, p_i) array
        True design matrix; must have full column rank.
    snr : (p_i,) array
        Coefficients divided by the noise standard deviation.
    c_X : (p_i,) array
        Contrast of interest for this design.
    w : float
        Frequency weight, ``w >= 0``.
    phi : float
        Bias-variance weight in the open interval (0, 1).
    """

    X: np.ndarray
    snr: np.ndarray
    c_X: np.ndarray
    w: float = 1.0
    phi: float = 0.5
    check_rank: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        X = _frozen(self.X, name="X")
        if X.ndim == 1:
            X = _frozen(X[:, None], name="X")
        if X.ndim != 2:
            raise DimensionMismatch(f"X must be a matrix, got shape {X.shape}")
        snr = _frozen(np.atleast_1d(self.snr), 1, "snr")
        c_X = _frozen(np.atleast_1d(self.c_X), 1, "c_X")
        if snr.shape[0] != X.shape[1] or c_X.shape[0] != X.shape[1]:
            raise DimensionMismatch(
                f"snr ({snr.shape[0]}) and c_X ({c_X.shape[0]}) must match the "
                f"{X.shape[1]} columns of X"
            )
        w = float(self.w)
        phi = float(self.phi)
        if not (w >= 0.0 and np.isfinite(w)):
            raise InvalidInput(f"w must be a finite nonnegative number, got {self.w}")
        if not (0.0 < phi < 1.0):
            raise InvalidInput(f"phi must lie strictly inside (0, 1), got {self.phi}")
        if self.check_rank:
            check_full_column_rank(X, "X")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "snr", snr)
        object.__setattr__(self, "c_X", c_X)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "phi", phi)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def signal(self):
        """Noise-free data ``X @ snr``."""
        return self.X @ self.snr

    @property
    def contrast_signal(self):
        """True contrast value ``c_X^T snr``."""
        return float(self.c_X @ self.snr)

    def gauss_markov_variance(self):
        """``c_X^T (X^T X)^{-1} c_X``, the variance of the correctly specified fit."""
        return float(self.c_X @ gram_inverse(self.X) @ self.c_X)

    def replace(self, **changes):
        kw = dict(X=self.X, snr=self.snr, c_X=self.c_X, w=self.w, phi=self.phi, check_rank=False)
        kw.update(changes)
        return CandidateModel(**kw)


@dataclass(frozen=True)
class ProposedDesign:
    """A design ``Z`` and its contrast (a vector, or a ``(p, q)`` array of contrasts)."""

    Z: np.ndarray
    c_Z: np.ndarray

    def __post_init__(self):
        Z = _frozen(self.Z, 2, "Z")
        c = _frozen(self.c_Z, name="c_Z")
        if c.shape[0] != Z.shape[1]:
            raise DimensionMismatch(f"contrast length {c.shape[0]} does not match {Z.shape[1]} columns")
        check_full_column_rank(Z, "Z")
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "c_Z", c)

    @property
    def contrasts(self):
        """Contrasts as a list of 1-D arrays."""
        return [self.c_Z] if self.c_Z.ndim == 1 else [self.c_Z[:, s] for s in range(self.c_Z.shape[1])]


@dataclass(frozen=True)
class GlmFit:
    gamma_hat: np.ndarray
    sigma1_sq_hat: float
    dof: int
    residuals: np.ndarray


@dataclass(frozen=True)
class PerformanceMeasures:
    c_b: float
    v_b: float
    cv_delta: float
    expected_t: float
    expected_f: float
    noncentrality: float


def _check_rows(Z, model):
    if Z.shape[0] != model.n:
        raise DimensionMismatch(f"Z has {Z.shape[0]} rows but the model has {model.n}")


def _check_contrast(Z, c_Z):
    c_Z = np.asarray(c_Z, dtype=float)
    if c_Z.shape != (Z.shape[1],):
        raise DimensionMismatch(f"c_Z must have shape ({Z.shape[1]},), got {c_Z.shape}")
    return c_Z


def glm_fit(Z, y):
    """Ordinary least-squares fit of ``y`` on ``Z`` via a QR decomposition.

    Returns
    -------
    GlmFit
        Coefficients, residual variance estimate ``RSS / (n - p)``, the
        degrees of freedom and the residual vector.
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float)
    if Z.ndim != 2 or y.ndim != 1 or y.shape[0] != Z.shape[0]:
        raise DimensionMismatch(f"incompatible shapes Z {Z.shape} and y {y.shape}")
    n, p = Z.shape
    if n <= p:
        raise DimensionMismatch(f"need more rows than columns, got {n} x {p}")
    check_full_column_rank(Z)
    Q, R = linalg.qr(Z, mode="economic")
    gamma = linalg.solve_triangular(R, Q.T @ y)
    resid = y - Z @ gamma
    dof = n - p
    return GlmFit(gamma, float(resid @ resid) / dof, dof, resid)


def residual_projector(Z):
    """``P_Z = I - Z (Z^T Z)^{-1} Z^T``."""
    Z = np.asarray(Z, dtype=float)
    check_full_column_rank(Z)
    K = gram_inverse(Z)
    P = np.eye(Z.shape[0]) - Z @ K @ Z.T
    return 0.5 * (P + P.T)


def expected_gamma(Z, model):
    """Expected coefficient vector ``(Z^T Z)^{-1} Z^T X snr``."""
    Z = np.asarray(Z, dtype=float)
    _check_rows(Z, model)
    check_full_column_rank(Z)
    return gram_inverse(Z) @ (Z.T @ model.signal)


def noncentrality(Z, model):
    """Noncentrality ``snr^T X^T P_Z X snr`` of the residual variance."""
    Z = np.asarray(Z, dtype=float)
    _check_rows(Z, model)
    check_full_column_rank(Z)
    h = model.signal
    g = Z.T @ h
    val = float(h @ h - g @ gram_inverse(Z) @ g)
    return max(val, 0.0)


def _contrast_mean(Z, c_Z, model):
    return float(c_Z @ expected_gamma(Z, model))


def contrast_bias(Z, c_Z, model):
    """Fractional contrast bias.

    For a zero true contrast value the bias is reported unnormalized, i.e.
    as the expected estimated contrast itself.
    """
    Z = np.asarray(Z, dtype=float)
    c_Z = _check_contrast(Z, c_Z)
    num = _contrast_mean(Z, c_Z, model)
    s = model.contrast_signal
    if s == 0.0:
        return num
    return num / s - 1.0


def contrast_bias_absolute(Z, c_Z, model):
    """Expected estimated contrast minus the true contrast value."""
    Z = np.asarray(Z, dtype=float)
    c_Z = _check_contrast(Z, c_Z)
    return _contrast_mean(Z, c_Z, model) - model.contrast_signal


def model_variance_bias(Z, model, dof=None):
    """Expected relative inflation of the residual variance, ``Delta / (n - p)``.

    ``dof`` overrides the divisor; by default it is ``n - cols(Z)``.
    """
    Z = np.asarray(Z, dtype=float)
    if dof is None:
        dof = Z.shape[0] - Z.shape[1]
    if dof <= 0:
        raise DimensionMismatch(f"non-positive degrees of freedom {dof}")
    return noncentrality(Z, model) / dof


def contrast_variance_change(Z, c_Z, model, dof=None):
    """Estimated contrast variance relative to the Gauss-Markov variance, minus one."""
    Z = np.asarray(Z, dtype=float)
    c_Z = _check_contrast(Z, c_Z)
    gm = model.gauss_markov_variance()
    if gm == 0.0:
        raise ZeroGaussMarkovVariance("c_X^T (X^T X)^{-1} c_X is zero")
    vb = model_variance_bias(Z, model, dof)
    return (vb + 1.0) * float(c_Z @ gram_inverse(Z) @ c_Z) / gm - 1.0


def t_statistic(fit, Z, c_Z):
    """T statistic of contrast ``c_Z`` for a fitted GLM."""
    Z = np.asarray(Z, dtype=float)
    c_Z = _check_contrast(Z, c_Z)
    if fit.sigma1_sq_hat <= 0.0:
        raise ZeroResidualVariance("residual variance estimate is zero")
    v = float(c_Z @ gram_inverse(Z) @ c_Z)
    return float(c_Z @ fit.gamma_hat) / (np.sqrt(fit.sigma1_sq_hat) * np.sqrt(v))


def expected_t(Z, c_Z, model):
    """Approximate expected T statistic.

    Uses the ratio of expectations ``E[num] / sqrt(E[sigma1^2])``, which is
    not the exact expectation of the ratio; the two agree closely only when
    ``n - p`` is large.
    """
    Z = np.asarray(Z, dtype=float)
    c_Z = _check_contrast(Z, c_Z)
    num = _contrast_mean(Z, c_Z, model)
    v = float(c_Z @ gram_inverse(Z) @ c_Z)
    vb = model_variance_bias(Z, model)
    return num / (np.sqrt(v) * np.sqrt(1.0 + vb))


def expected_f(Z, c_Z, model):
    """Expected bias-variance function ``(V_b + 1) c^T K c + bias^2``."""
    Z = np.asarray(Z, dtype=float)
    c_Z = _check_contrast(Z, c_Z)
    vb = model_variance_bias(Z, model)
    v = float(c_Z @ gram_inverse(Z) @ c_Z)
    bias = contrast_bias_absolute(Z, c_Z, model)
    return (vb + 1.0) * v + bias**2


def performance_measures(Z, c_Z, model):
    """All analytic measures for one (design, contrast, model) triple."""
    return PerformanceMeasures(
        c_b=contrast_bias(Z, c_Z, model),
        v_b=model_variance_bias(Z, model),
        cv_delta=contrast_variance_change(Z, c_Z, model),
        expected_t=expected_t(Z, c_Z, model),
        expected_f=expected_f(Z, c_Z, model),
        noncentrality=noncentrality(Z, model),
    )
