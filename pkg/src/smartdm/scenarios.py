"""Candidate-model families: shifted infusion ramps, block designs and HRF shapes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadLengths, BadRanges, DimensionMismatch, ShiftExceedsLength
from .glm import CandidateModel

# Acquisition timing used to rebuild the infusion design: 598 usable volumes
# at TR 2.5 s, a 5 minute baseline (120 volumes) and infusions over minutes
# 5-11 (144 volumes).
INFUSION_N = 598
INFUSION_BASELINE = 120
INFUSION_RAMP = 144

HRF_RANGES = {
    "h1": (1.0, 3.0),
    "h2": (3.0, 7.0),
    "h3": (3.0, 7.0),
    "h4": (3.0, 9.0),
    "f": (0.0, 0.5),
}


@dataclass(frozen=True)
class BaseDesign:
    """Two-column base design: the response of interest and a linear drift."""

    ev_primary: np.ndarray
    ev_drift: np.ndarray

    @property
    def n(self):
        return self.ev_primary.shape[0]

    @property
    def X(self):
        return np.column_stack([self.ev_primary, self.ev_drift])


def build_infusion_base(n=INFUSION_N, baseline_len=INFUSION_BASELINE, ramp_len=INFUSION_RAMP):
    """Infusion ramp (0 at baseline, linear rise, plateau at 1) plus a [0, 1] drift."""
    if baseline_len < 0 or ramp_len <= 0 or baseline_len + ramp_len >= n:
        raise BadLengths(f"need baseline_len + ramp_len < n, got {baseline_len} + {ramp_len} vs {n}")
    t = np.arange(n, dtype=float)
    ev1 = np.clip((t - baseline_len) / ramp_len, 0.0, 1.0)
    ev2 = t / (n - 1)
    return BaseDesign(ev1, ev2)


def centered_drift(base):
    return base.ev_drift - base.ev_drift.mean()


def shift_right(ev, k):
    """Shift ``ev`` right by ``k`` samples, padding on the left with zeros."""
    ev = np.asarray(ev, dtype=float)
    if k == 0:
        return ev.copy()
    out = np.zeros_like(ev)
    out[k:] = ev[:-k]
    return out


def shift_family(base, m, snr=(1.0, 0.5), contrast=(1.0, 0.0), w=1.0, phi=0.5, start=1):
    """Models with the primary EV shifted right by ``start .. start+m-1`` samples."""
    shifts = range(start, start + m)
    if start < 0 or start + m - 1 >= base.n:
        raise ShiftExceedsLength(f"shifts up to {start + m - 1} do not fit n={base.n}")
    return [
        CandidateModel(np.column_stack([shift_right(base.ev_primary, k), base.ev_drift]),
                       snr, contrast, w, phi)
        for k in shifts
    ]


def null_augment(models, null_specs, w=1.0, phi=0.5):
    """Append null models; ``null_specs`` holds ``(X, snr, c_X)`` triples.

    Each appended model must have a zero true contrast value so that the
    optimizer learns to map it to zero.
    """
    out = list(models)
    for X, snr, c_X in null_specs:
        mdl = CandidateModel(X, snr, c_X, w, phi)
        if mdl.contrast_signal != 0.0:
            raise DimensionMismatch("null models need c_X^T snr = 0")
        out.append(mdl)
    return out


def build_infusion_family_723(base=None, max_shift=180, step=1, phi=0.5):
    """Four signed shift blocks, two pure-drift nulls and one all-zero null.

    With the defaults this yields the 723-model infusion family; ``step``
    thins the shifts (``step=10`` gives 72 signal models plus 3 nulls).
    """
    base = build_infusion_base() if base is None else base
    shifts = list(range(step, max_shift + 1, step))
    if shifts[-1] >= base.n:
        raise ShiftExceedsLength(f"shift {shifts[-1]} does not fit n={base.n}")
    Xs = [np.column_stack([shift_right(base.ev_primary, k), base.ev_drift]) for k in shifts]
    models = []
    for snr in ((1.0, 0.5), (-1.0, 0.5), (1.0, -0.5), (-1.0, -0.5)):
        models.extend(CandidateModel(X, snr, (1.0, 0.0), 1.0, phi) for X in Xs)
    X0 = base.X
    nulls = [(X0, (0.0, 1.0), (1.0, 0.0)), (X0, (0.0, -1.0), (1.0, 0.0)), (X0, (0.0, 0.0), (1.0, 0.0))]
    return null_augment(models, nulls, 1.0, phi)


def block_ev(n=200, block_len=20):
    """Alternating rest/task blocks of equal length, starting with rest."""
    if block_len <= 0 or 2 * block_len > n:
        raise BadLengths(f"block_len {block_len} incompatible with n={n}")
    t = np.arange(n)
    return ((t // block_len) % 2).astype(float)


def block_family(n=200, block_len=20, max_shift=6, phi=0.01):
    """Shifted block EVs at SNR +1 followed by the same designs at SNR -1."""
    if max_shift < 1 or max_shift >= n:
        raise BadLengths(f"max_shift must be in [1, n), got {max_shift}")
    ev = block_ev(n, block_len)
    Xs = [shift_right(ev, k)[:, None] for k in range(1, max_shift + 1)]
    pos = [CandidateModel(X, [1.0], [1.0], 1.0, phi) for X in Xs]
    neg = [CandidateModel(X, [-1.0], [1.0], 1.0, phi) for X in Xs]
    return pos + neg


@dataclass(frozen=True)
class HrfParams:
    """Half-cosine HRF: delay ``h1``, rise ``h2``, fall ``h3``, recovery ``h4`` (s), undershoot ``f``."""

    h1: float
    h2: float
    h3: float
    h4: float
    f: float
    dt: float = 0.1

    def __post_init__(self):
        if min(self.h1, self.h2, self.h3, self.h4) <= 0 or self.dt <= 0:
            raise BadRanges("HRF durations and dt must be positive")
        if not 0.0 <= self.f < 1.0:
            raise BadRanges(f"undershoot fraction must lie in [0, 1), got {self.f}")

    @property
    def knots(self):
        k1 = self.h1
        k2 = k1 + self.h2
        k3 = k2 + self.h3
        return (k1, k2, k3, k3 + self.h4)


def hrf_pieces(params, t):
    """Values of the four non-trivial half-cosine pieces at ``t`` (no masking)."""
    h1, h2, h3, h4, f = params.h1, params.h2, params.h3, params.h4, params.f
    t = np.asarray(t, dtype=float)
    rise = np.cos(np.pi / 2 - np.pi / (2 * h2) * (t - h1))
    fall = np.cos((np.pi / (2 * h3) + np.arcsin(f) / h3) * (h1 + h2 - t))
    recovery = f * np.cos(np.pi - np.pi / (2 * h4) * (t - h1 - h2 - h3))
    return rise, fall, recovery


def hrf_evaluate(params, t):
    """Half-cosine HRF at times ``t`` (scalar or array, seconds)."""
    t_arr = np.asarray(t, dtype=float)
    k1, k2, k3, k4 = params.knots
    rise, fall, recovery = hrf_pieces(params, t_arr)
    out = np.select(
        [t_arr <= k1, t_arr <= k2, t_arr <= k3, t_arr <= k4],
        [0.0, rise, fall, recovery],
        default=0.0,
    )
    return float(out) if np.ndim(t) == 0 else out


def hrf_support_length(ranges=None, dt=0.1):
    """Number of samples covering the longest possible HRF for ``ranges``."""
    ranges = HRF_RANGES if ranges is None else ranges
    longest = sum(ranges[k][1] for k in ("h1", "h2", "h3", "h4"))
    return int(np.floor(longest / dt + 1e-9)) + 1


def hrf_sample(count, ranges=None, dt=0.1, seed=0, length=None):
    """Draw ``count`` HRF parameter sets uniformly and sample each curve.

    Returns
    -------
    params : list of HrfParams
    curves : (length, count) array
        Curves sampled at ``t = 0, dt, 2 dt, ...`` and zero padded to a
        common length covering the longest possible support.
    """
    ranges = dict(HRF_RANGES if ranges is None else ranges)
    for key in ("h1", "h2", "h3", "h4", "f"):
        lo, hi = ranges[key]
        if not lo <= hi:
            raise BadRanges(f"range for {key} is empty: {lo} > {hi}")
        if key != "f" and lo <= 0:
            raise BadRanges(f"durations must be positive, got {key} lower bound {lo}")
    if not (0.0 <= ranges["f"][0] and ranges["f"][1] < 1.0):
        raise BadRanges("undershoot range must lie in [0, 1)")
    if count < 1:
        raise BadRanges("count must be positive")
    rng = np.random.default_rng(seed)
    length = hrf_support_length(ranges, dt) if length is None else int(length)
    t = np.arange(length) * dt
    params, curves = [], np.empty((length, count))
    for j in range(count):
        draw = {k: rng.uniform(*ranges[k]) for k in ("h1", "h2", "h3", "h4", "f")}
        hp = HrfParams(dt=dt, **draw)
        params.append(hp)
        curves[:, j] = hrf_evaluate(hp, t)
    return params, curves


def hrf_convolve(ev, hrf, dt=0.1):
    """Causal convolution of an event vector with an HRF, truncated to ``len(ev)``."""
    ev = np.asarray(ev, dtype=float)
    hrf = np.asarray(hrf, dtype=float)
    if ev.ndim != 1 or hrf.ndim != 1 or hrf.size == 0:
        raise DimensionMismatch("ev and hrf must be non-empty vectors")
    return np.convolve(ev, hrf)[: ev.size] * dt


def hrf_family(count=200, seed=0, dt=0.1, null=True):
    """HRF shapes as single-column models at SNR 1, optionally followed by SNR-0 copies."""
    _, curves = hrf_sample(count, dt=dt, seed=seed)
    models = [CandidateModel(curves[:, j], [1.0], [1.0]) for j in range(count)]
    if null:
        models += [CandidateModel(curves[:, j], [0.0], [1.0]) for j in range(count)]
    return models
