"""Dense and limited-memory SR1/BFGS Hessian approximations."""

from __future__ import annotations

from collections import deque

import numpy as np

SR1_SKIP = 1e-8
BFGS_SKIP = 1e-10
HISTORY = 10


def quasi_newton_update(B, s, y, kind="sr1"):
    """Return the updated dense approximation; the input is left untouched.

    SR1 is skipped when ``|r^T s| < 1e-8 |r| |s|`` with ``r = y - B s``;
    BFGS is skipped when ``s^T y <= 1e-10``.
    """
    B = np.array(B, dtype=float)
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    if kind == "sr1":
        r = y - B @ s
        rs = r @ s
        if abs(rs) < SR1_SKIP * np.linalg.norm(r) * np.linalg.norm(s) or rs == 0.0:
            return B
        return B + np.outer(r, r) / rs
    if kind == "bfgs":
        sy = s @ y
        if sy <= BFGS_SKIP:
            return B
        Bs = B @ s
        return B - np.outer(Bs, Bs) / (s @ Bs) + np.outer(y, y) / sy
    raise ValueError(f"unknown update kind {kind!r}")


class DenseApprox:
    """Full ``dim x dim`` SR1 or BFGS matrix, starting from ``scale * I``."""

    def __init__(self, dim, kind="sr1", scale=1.0):
        self.kind = kind
        self.B = scale * np.eye(dim)

    def matvec(self, v):
        return self.B @ v

    def column(self, i):
        return self.B[:, i]

    def dense(self):
        return self.B

    def update(self, s, y):
        self.B = quasi_newton_update(self.B, s, y, self.kind)


class LimitedMemoryApprox:
    """Compact-representation L-SR1 / L-BFGS keeping the last ``history`` pairs."""

    def __init__(self, dim, kind="lbfgs", history=HISTORY, scale=1.0):
        self.dim = dim
        self.kind = kind
        self.scale = scale
        self.pairs = deque(maxlen=history)
        self._cache = None

    def _compact(self):
        if self._cache is not None:
            return self._cache
        if not self.pairs:
            self._cache = (None, None)
            return self._cache
        S = np.column_stack([p[0] for p in self.pairs])
        Y = np.column_stack([p[1] for p in self.pairs])
        sig = self.scale
        SY = S.T @ Y
        Lw = np.tril(SY, -1)
        D = np.diag(np.diag(SY))
        if self.kind == "lbfgs":
            W = np.hstack([sig * S, Y])
            N = np.block([[sig * (S.T @ S), Lw], [Lw.T, -D]])
            self._cache = (W, -np.linalg.pinv(N))
        else:
            Psi = Y - sig * S
            N = D + Lw + Lw.T - sig * (S.T @ S)
            self._cache = (Psi, np.linalg.pinv(N))
        return self._cache

    def matvec(self, v):
        W, Minv = self._compact()
        out = self.scale * v
        if W is not None:
            out = out + W @ (Minv @ (W.T @ v))
        return out

    def column(self, i):
        e = np.zeros(self.dim)
        e[i] = 1.0
        return self.matvec(e)

    def dense(self):
        return np.column_stack([self.column(i) for i in range(self.dim)])

    def update(self, s, y):
        if self.kind == "lbfgs":
            sy = s @ y
            if sy <= BFGS_SKIP:
                return
            self.scale = (y @ y) / sy
        else:
            r = y - self.matvec(s)
            rs = r @ s
            if abs(rs) < SR1_SKIP * np.linalg.norm(r) * np.linalg.norm(s) or rs == 0.0:
                return
        self.pairs.append((np.array(s, dtype=float), np.array(y, dtype=float)))
        self._cache = None


def make_approx(kind, dim, scale=1.0, history=HISTORY):
    if kind in ("sr1", "bfgs"):
        return DenseApprox(dim, kind, scale)
    if kind in ("lsr1", "lbfgs"):
        return LimitedMemoryApprox(dim, kind, history, scale)
    raise ValueError(f"unknown quasi-Newton kind {kind!r}")
