"""Monte-Carlo harness: noisy data from candidate models, refits with a proposed design."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import DimensionMismatch, InvalidInput
from .glm import (
    CandidateModel,
    ProposedDesign,
    check_full_column_rank,
    contrast_bias,
    contrast_variance_change,
    expected_t,
    model_variance_bias,
)

CHUNK = 1000
THREADS_ENV = "SMARTDM_THREADS"


def worker_count():
    """Thread cap from ``SMARTDM_THREADS`` (default: CPU count)."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        k = int(raw)
    except ValueError as exc:
        raise InvalidInput(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    if k < 1:
        raise InvalidInput(f"{THREADS_ENV} must be positive, got {k}")
    return k


@dataclass(frozen=True)
class SimulationPlan:
    models: tuple
    design: ProposedDesign
    n_reps: int = 1000
    seed: int = 0
    sigma: float = 1.0
    contrast: int = 0

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        if self.n_reps < 1:
            raise InvalidInput("n_reps must be at least 1")
        if self.sigma <= 0:
            raise InvalidInput("sigma must be positive")
        for i, mdl in enumerate(self.models):
            if mdl.n != self.design.Z.shape[0]:
                raise DimensionMismatch(f"model {i} has {mdl.n} rows, design has {self.design.Z.shape[0]}")


@dataclass
class SimulatedFits:
    """Per-model, per-replicate contrast estimates, variance estimates and T statistics."""

    estimates: np.ndarray
    sigma_sq: np.ndarray
    t: np.ndarray


def noise_block(seed, model_index, chunk_index, n, size):
    """Standard normal noise for one replicate chunk of one model.

    The stream is keyed by ``(seed, model_index, chunk_index)`` so results do
    not depend on execution order or thread count. Draws are replicate-major,
    so a shorter final chunk is a prefix of the full one.
    """
    ss = np.random.SeedSequence([int(seed), int(model_index), int(chunk_index)])
    return np.random.Generator(np.random.PCG64(ss)).standard_normal((size, n)).T


class _Fitter:
    """Least-squares fits of many responses against one design (QR based)."""

    def __init__(self, Z, c_Z):
        Z = np.asarray(Z, dtype=float)
        check_full_column_rank(Z)
        self.Z = Z
        self.c = np.asarray(c_Z, dtype=float)
        self.Q, self.R = linalg.qr(Z, mode="economic")
        self.dof = Z.shape[0] - Z.shape[1]
        Rinv_c = linalg.solve_triangular(self.R, self.c, trans="T")
        self.c_var = float(Rinv_c @ Rinv_c)

    def fit(self, Y):
        gamma = linalg.solve_triangular(self.R, self.Q.T @ Y)
        resid = Y - self.Z @ gamma
        s2 = np.einsum("ij,ij->j", resid, resid) / self.dof
        est = self.c @ gamma
        return est, s2, est / np.sqrt(s2 * self.c_var)


def _simulate_model(fitter, model, index, n_reps, seed, sigma):
    n = model.n
    mean = model.signal * sigma
    out = [np.empty(n_reps) for _ in range(3)]
    for k, start in enumerate(range(0, n_reps, CHUNK)):
        size = min(CHUNK, n_reps - start)
        Y = mean[:, None] + sigma * noise_block(seed, index, k, n, size)
        for arr, vals in zip(out, fitter.fit(Y)):
            arr[start : start + size] = vals
    return out


def simulate_fits(plan):
    """Fit ``plan.n_reps`` simulated data sets per model with the proposed design.

    Data follow ``y = X_i snr_i sigma + sigma eps``; with ``sigma = 1`` this is
    the SNR convention of the analytic measures.
    """
    contrasts = plan.design.contrasts
    fitter = _Fitter(plan.design.Z, contrasts[plan.contrast])
    work = [(fitter, mdl, i, plan.n_reps, plan.seed, plan.sigma) for i, mdl in enumerate(plan.models)]
    workers = min(worker_count(), max(1, len(work)))
    if workers == 1:
        rows = [_simulate_model(*w) for w in work]
    else:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(lambda w: _simulate_model(*w), work))
    m = len(rows)
    est = np.empty((m, plan.n_reps))
    s2 = np.empty_like(est)
    t = np.empty_like(est)
    for i, (e, v, tt) in enumerate(rows):
        est[i], s2[i], t[i] = e, v, tt
    return SimulatedFits(est, s2, t)


def summarize(values):
    """Mean, sample SD and SE, accumulated with exact summation."""
    vals = [float(v) for v in values]
    k = len(vals)
    mean = math.fsum(vals) / k
    var = math.fsum((v - mean) ** 2 for v in vals) / (k - 1) if k > 1 else 0.0
    sd = math.sqrt(var)
    return mean, sd, sd / math.sqrt(k)


@dataclass
class PerformanceReport:
    """Per-model rows ``(index, c_b, v_b, cv_delta, expected_t, mc_mean, mc_sd, mc_se)``."""

    per_model: list
    roc: list = None
    columns: tuple = field(default=("index", "c_b", "v_b", "cv_delta", "expected_t",
                                    "mc_mean", "mc_sd", "mc_se"))


def performance_curves(design, models, n_reps=0, seed=0, contrast=0):
    """Analytic bias/variance measures per model, with Monte-Carlo columns when ``n_reps > 0``."""
    Z = np.asarray(design.Z, dtype=float)
    c = design.contrasts[contrast]
    models = list(models)
    mc = None
    if n_reps > 0:
        mc = simulate_fits(SimulationPlan(models, design, n_reps, seed, contrast=contrast))
    rows = []
    for i, mdl in enumerate(models):
        cb = contrast_bias(Z, c, mdl)
        vb = model_variance_bias(Z, mdl)
        cv = contrast_variance_change(Z, c, mdl)
        et = expected_t(Z, c, mdl)
        if mc is None:
            stats = (math.nan, math.nan, math.nan)
        else:
            stats = summarize(mc.estimates[i])
        rows.append((i, cb, vb, cv, et) + stats)
    return PerformanceReport(rows)


def roc_curve(design, signal_model, null_model, thresholds, n_reps=1000, seed=0, contrast=0):
    """Detection rates of the rule ``T >= t_c`` over a threshold grid.

    Returns
    -------
    list of (t_c, fpr, tpr)
    """
    sims = simulate_fits(SimulationPlan([signal_model, null_model], design, n_reps, seed,
                                        contrast=contrast))
    t_sig = np.sort(sims.t[0])
    t_null = np.sort(sims.t[1])
    out = []
    for tc in thresholds:
        tpr = 1.0 - np.searchsorted(t_sig, tc, side="left") / n_reps
        fpr = 1.0 - np.searchsorted(t_null, tc, side="left") / n_reps
        out.append((float(tc), float(fpr), float(tpr)))
    return out


def best_operating_point(roc):
    """Row maximizing sensitivity + specificity, returned as ``(t_c, sensitivity, specificity)``."""
    tc, fpr, tpr = max(roc, key=lambda r: r[2] + 1.0 - r[1])
    return tc, tpr, 1.0 - fpr


def default_thresholds(lo=-5.0, hi=15.0, step=0.05):
    grid = np.arange(lo, hi + step / 2, step)
    return np.concatenate([[-np.inf], grid, [np.inf]])


def temporal_derivative(ev):
    """First differences of ``ev`` with a leading zero."""
    ev = np.asarray(ev, dtype=float)
    return np.concatenate([[0.0], np.diff(ev)])


def derivative_design(base):
    """``[EV1, EV2, d EV1 / dt]`` for a two-column base design."""
    return np.column_stack([base.ev_primary, base.ev_drift, temporal_derivative(base.ev_primary)])


@dataclass
class BaselineComparison:
    """Mean estimates and SEs per model for the optimized and derivative designs."""

    truth: np.ndarray
    optimal_mean: np.ndarray
    optimal_se: np.ndarray
    derivative_mean: np.ndarray
    derivative_se: np.ndarray

    @property
    def optimal_bias(self):
        return self.optimal_mean - self.truth

    @property
    def derivative_bias(self):
        return self.derivative_mean - self.truth


def derivative_baseline(models, optimal_design, base, n_reps=1000, seed=0):
    """Compare the optimized design with the temporal-derivative design on ``models``.

    The derivative design uses the contrast ``e_1``.
    """
    XD = derivative_design(base)
    cD = np.zeros(XD.shape[1])
    cD[0] = 1.0
    res = []
    for design in (optimal_design, ProposedDesign(XD, cD)):
        sims = simulate_fits(SimulationPlan(models, design, n_reps, seed))
        stats = np.array([summarize(row) for row in sims.estimates])
        res.append((stats[:, 0], stats[:, 2]))
    truth = np.array([mdl.contrast_signal for mdl in models])
    return BaselineComparison(truth, res[0][0], res[0][1], res[1][0], res[1][1])


def model_from_design(X, snr, c_X=None):
    X = np.asarray(X, dtype=float)
    if c_X is None:
        c_X = np.eye(X.shape[1] if X.ndim == 2 else 1)[0]
    return CandidateModel(X, snr, c_X)
