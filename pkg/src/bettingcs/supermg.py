"""Closed-form predictable-mixture confidence sequences (Hoeffding and empirical Bernstein)."""

from __future__ import annotations

from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .core import (
    ConfigError,
    ConfSeqRecord,
    Interval,
    LambdaSchedule,
    check_alpha,
    check_unit_data,
    hull_from_mask,
    make_grid,
    psi_e,
    psi_h,
    running_moments,
    schedule_array,
)


def eb_weights(xs) -> np.ndarray:
    """``v_i = 4 (x_i - mu_hat_{i-1})**2`` with the shrunken running mean."""
    xs = np.asarray(xs, dtype=float)
    mu, _ = running_moments(xs)
    return 4.0 * (xs - mu[:-1]) ** 2


def _lambdas(xs, alpha, sched: Optional[LambdaSchedule], lambdas, default: str) -> np.ndarray:
    if lambdas is not None:
        lam = np.broadcast_to(np.asarray(lambdas, dtype=float), xs.shape).copy()
    else:
        sched = sched if sched is not None else LambdaSchedule(default)
        lam = schedule_array(sched, xs, alpha)
    if np.any(lam <= 0):
        raise ConfigError("schedule must emit positive lambdas")
    return lam


def pm_center_margin(xs, alpha: float = 0.05, lambdas=None, kind: str = "h"):
    """Weighted center and margin of the predictable-mixture CS.

    Parameters
    ----------
    xs : array_like
        Observations in [0, 1].
    lambdas : array_like
        Predictable bets, one per observation.
    kind : {"h", "eb"}

    Returns
    -------
    center, margin : ndarray
    """
    xs = np.asarray(xs, dtype=float)
    lam = np.asarray(lambdas, dtype=float)
    s_l = np.cumsum(lam)
    center = np.cumsum(lam * xs) / s_l
    if kind == "h":
        penalty = psi_h(lam)
    elif kind == "eb":
        penalty = eb_weights(xs) * psi_e(lam)
    else:
        raise ConfigError(f"unknown kind {kind!r}")
    margin = (np.log(2.0 / alpha) + np.cumsum(penalty)) / s_l
    return center, margin


def _record(center, margin, method, alpha) -> ConfSeqRecord:
    lo = np.clip(center - margin, 0.0, 1.0)
    hi = np.clip(center + margin, 0.0, 1.0)
    return ConfSeqRecord(lo, hi, method, alpha)


def pm_hoeffding_cs(xs, alpha: float = 0.05, sched: Optional[LambdaSchedule] = None,
                    lambdas=None) -> ConfSeqRecord:
    """Predictably-mixed Hoeffding confidence sequence.

    Parameters
    ----------
    xs : array_like
        Observations in [0, 1].
    alpha : float
    sched : LambdaSchedule, optional
        Defaults to ``pm-h``.
    lambdas : array_like, optional
        Explicit bets; overrides ``sched``.
    """
    alpha = check_alpha(alpha)
    xs = check_unit_data(xs)
    if xs.size == 0:
        raise ValueError("empty input")
    lam = _lambdas(xs, alpha, sched, lambdas, "pm-h")
    center, margin = pm_center_margin(xs, alpha, lam, "h")
    return _record(center, margin, "pm-h", alpha)


def pm_eb_cs(xs, alpha: float = 0.05, sched: Optional[LambdaSchedule] = None,
             lambdas=None) -> ConfSeqRecord:
    """Predictably-mixed empirical-Bernstein confidence sequence (default ``pm-eb``)."""
    alpha = check_alpha(alpha)
    xs = check_unit_data(xs)
    if xs.size == 0:
        raise ValueError("empty input")
    lam = _lambdas(xs, alpha, sched, lambdas, "pm-eb")
    center, margin = pm_center_margin(xs, alpha, lam, "eb")
    return _record(center, margin, "pm-eb", alpha)


def va_eb_ci(xs, alpha: float = 0.05, c: float = 0.5) -> Interval:
    """Running intersection at ``n`` of the EB sequence with the fixed-``n`` schedule."""
    xs = check_unit_data(xs)
    n = xs.size
    if n == 0:
        raise ValueError("empty input")
    rec = pm_eb_cs(xs, alpha, LambdaSchedule("va-eb", c=c, horizon=n))
    return rec.interval(n, intersected=True)


def pm_log_process(xs, m, lambdas, kind: str = "h", side: int = 1) -> np.ndarray:
    """Log of the one-sided process ``prod exp(s*lam_i*(x_i - m) - penalty_i)``.

    Returns an array of shape ``(n, len(m))`` (rows are times ``1..n``).
    """
    xs = np.asarray(xs, dtype=float)
    lam = np.asarray(lambdas, dtype=float)
    m = np.atleast_1d(np.asarray(m, dtype=float))
    penalty = psi_h(lam) if kind == "h" else eb_weights(xs) * psi_e(lam)
    s_lx = np.cumsum(lam * xs)[:, None]
    s_l = np.cumsum(lam)[:, None]
    return side * (s_lx - s_l * m[None, :]) - np.cumsum(penalty)[:, None]


def pm_two_sided_log_process(xs, m, lambdas, kind: str = "h") -> np.ndarray:
    """``log(max(M+, M-) / 2)``; thresholding at ``1/alpha`` gives the closed form."""
    up = pm_log_process(xs, m, lambdas, kind, 1)
    down = pm_log_process(xs, m, lambdas, kind, -1)
    return np.maximum(up, down) - np.log(2.0)


def permuted_eb_ci(xs, alpha: float = 0.05, B: int = 10, seed: int = 0,
                   grid_size: int = 1000, c: float = 0.5,
                   include_identity: bool = False) -> Interval:
    """Derandomized EB interval from ``B`` seeded permutations of the batch.

    The per-permutation processes at time ``n`` are averaged on the grid and the
    sublevel set ``{m : average < 1/alpha}`` is reported as a widened hull.
    """
    alpha = check_alpha(alpha)
    xs = check_unit_data(xs)
    n = xs.size
    if n == 0:
        raise ValueError("empty input")
    if B < 1:
        raise ConfigError("B must be at least 1")
    grid = make_grid(grid_size)
    rng = np.random.default_rng(seed)
    sched = LambdaSchedule("va-eb", c=c, horizon=n)
    logs = np.empty((B, grid.size))
    for b in range(B):
        perm = np.arange(n) if (include_identity and b == 0) else rng.permutation(n)
        xb = xs[perm]
        lam = schedule_array(sched, xb, alpha)
        logs[b] = pm_two_sided_log_process(xb, grid, lam, "eb")[-1]
    avg = logsumexp(logs, axis=0) - np.log(B)
    mask = avg < np.log(1.0 / alpha)
    lo, hi = hull_from_mask(grid, mask)
    return Interval(float(lo[0]), float(hi[0]))
