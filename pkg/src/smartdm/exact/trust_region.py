"""Trust-region building blocks: Cauchy point, truncated CG and radius update."""

from __future__ import annotations

import numpy as np
from scipy import linalg

ACCEPT_HIGH = 0.75
ACCEPT_LOW = 0.1
EXPAND_FRACTION = 0.8


def trust_region_update(rho, step, radius):
    """Expand on very good full-length steps, shrink on poor ones."""
    step_len = float(np.max(np.abs(step))) if np.size(step) else 0.0
    if rho > ACCEPT_HIGH:
        return 2.0 * radius if step_len > EXPAND_FRACTION * radius else radius
    if ACCEPT_LOW <= rho <= ACCEPT_HIGH:
        return radius
    return 0.5 * radius


def cauchy_point(g, matvec, column, lo, hi, max_segments=None):
    """First local minimizer of ``g^T p + p^T B p / 2`` along ``P(-t g)``.

    ``lo <= 0 <= hi`` is the intersection of the shifted bounds with the
    trust region. Breakpoints are visited in order and ``B d`` is updated
    with one column of ``B`` per variable that hits a bound.

    Returns
    -------
    p : ndarray
    segments : int
        Number of breakpoints passed.
    """
    n = g.size
    t_break = np.full(n, np.inf)
    neg, pos = g < 0, g > 0
    t_break[neg] = hi[neg] / -g[neg]
    t_break[pos] = lo[pos] / -g[pos]
    d = -g.astype(float)
    d[t_break <= 0] = 0.0
    p = np.zeros(n)
    Bd = matvec(d)
    Bp = np.zeros(n)
    fp = g @ d
    fpp = d @ Bd
    finite = np.flatnonzero(np.isfinite(t_break) & (t_break > 0))
    order = finite[np.argsort(t_break[finite], kind="stable")]
    t_prev = 0.0
    segments = 0
    k = 0
    while k < order.size:
        if fp >= 0:
            return p, segments
        t_next = t_break[order[k]]
        dt = t_next - t_prev
        if fpp > 0 and -fp / fpp < dt:
            return p + (-fp / fpp) * d, segments
        p += dt * d
        Bp += dt * Bd
        while k < order.size and t_break[order[k]] <= t_next:
            i = order[k]
            p[i] = hi[i] if d[i] > 0 else lo[i]
            Bd -= d[i] * column(i)
            d[i] = 0.0
            k += 1
        fp = g @ d + Bp @ d
        fpp = d @ Bd
        t_prev = t_next
        segments += 1
        if max_segments is not None and segments >= max_segments:
            return p, segments
    if np.any(d) and fp < 0 and fpp > 0:
        p = p + (-fp / fpp) * d
    return p, segments


def modified_cholesky(M, beta=1e-3, max_tries=60):
    """Cholesky factor of ``M + tau I`` with the smallest doubling shift that works."""
    diag_min = float(np.min(np.diag(M))) if M.size else 1.0
    tau = 0.0 if diag_min > 0 else beta - diag_min
    I = np.eye(M.shape[0])
    for _ in range(max_tries):
        try:
            return linalg.cho_factor(M + tau * I, lower=True), tau
        except linalg.LinAlgError:
            tau = max(2.0 * tau, beta)
    raise linalg.LinAlgError("modified Cholesky did not find a positive shift")


def _max_step(v, d, lo, hi):
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(d > 0, (hi - v) / d, np.where(d < 0, (lo - v) / d, np.inf))
    return max(float(np.min(t)) if t.size else np.inf, 0.0)


def steihaug_cg(g, matvec, lo, hi, tol, max_iter=None, precond=None):
    """Truncated CG for ``min g^T v + v^T B v / 2`` over the box ``lo <= v <= hi``.

    Stops when the residual falls below ``tol``, on negative curvature or
    when an iterate would leave the box; in the last two cases the step is
    continued to the box boundary.

    Returns
    -------
    v : ndarray
    status : str
        ``"converged"``, ``"negative_curvature"``, ``"boundary"``,
        ``"max_iter"`` or ``"breakdown"``.
    iterations : int
    """
    n = g.size
    v = np.zeros(n)
    if n == 0:
        return v, "converged", 0
    max_iter = n if max_iter is None else max_iter
    r = g.astype(float)
    if np.linalg.norm(r) <= tol:
        return v, "converged", 0
    z = r if precond is None else precond(r)
    d = -z
    rz = r @ z
    for k in range(max_iter):
        Bd = matvec(d)
        curv = d @ Bd
        if not np.isfinite(curv) or not np.isfinite(rz):
            return v, "breakdown", k
        tau = _max_step(v, d, lo, hi)
        if curv <= 0:
            return np.clip(v + tau * d, lo, hi), "negative_curvature", k + 1
        alpha = rz / curv
        if alpha >= tau:
            return np.clip(v + tau * d, lo, hi), "boundary", k + 1
        v = v + alpha * d
        r = r + alpha * Bd
        if np.linalg.norm(r) <= tol:
            return v, "converged", k + 1
        z = r if precond is None else precond(r)
        rz_new = r @ z
        d = -z + (rz_new / rz) * d
        rz = rz_new
    return v, "max_iter", max_iter
