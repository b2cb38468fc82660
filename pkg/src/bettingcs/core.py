"""Shared numeric primitives: psi functions, running moments, lambda schedules."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the domain of a formula."""


class ConfigError(ValueError):
    """An invalid or incomplete configuration."""


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def check_unit_data(xs) -> np.ndarray:
    """Return ``xs`` as a float array, raising if any value is outside [0, 1]."""
    xs = np.asarray(xs, dtype=float).ravel()
    bad = np.flatnonzero(~((xs >= 0.0) & (xs <= 1.0)))
    if bad.size:
        i = int(bad[0])
        raise DomainError(f"observation {i + 1} = {xs[i]!r} is outside [0, 1]")
    return xs


# ---------------------------------------------------------------------------
# psi functions
# ---------------------------------------------------------------------------

def psi_h(lam):
    """Hoeffding cumulant bound ``lam**2 / 8``."""
    lam = np.asarray(lam, dtype=float)
    out = lam * lam / 8.0
    return float(out) if out.ndim == 0 else out


_PSI_E_SERIES = 1e-4


def psi_e(lam):
    """Empirical-Bernstein cumulant bound ``(-log(1 - lam) - lam) / 4``.

    Parameters
    ----------
    lam : float or array_like
        Values in [0, 1).

    Returns
    -------
    float or ndarray
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(~((lam >= 0.0) & (lam < 1.0))):
        raise DomainError("psi_e requires 0 <= lambda < 1")
    small = np.abs(lam) < _PSI_E_SERIES
    with np.errstate(divide="ignore"):
        direct = (-np.log1p(-lam) - lam) / 4.0
    series = lam**2 / 8.0 + lam**3 / 12.0 + lam**4 / 16.0
    out = np.where(small, series, direct)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Intervals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]``; empty when ``lo > hi``."""

    lo: float
    hi: float

    @property
    def empty(self) -> bool:
        return not self.lo <= self.hi

    @property
    def width(self) -> float:
        return 0.0 if self.empty else self.hi - self.lo

    def __contains__(self, m: float) -> bool:
        return (not self.empty) and self.lo <= m <= self.hi

    def clip(self, lo: float = 0.0, hi: float = 1.0) -> "Interval":
        return Interval(max(self.lo, lo), min(self.hi, hi))

    def intersect(self, other: "Interval") -> "Interval":
        return Interval(max(self.lo, other.lo), min(self.hi, other.hi))


# ---------------------------------------------------------------------------
# Running moments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunningMoments:
    """Shrunken running mean and variance with pseudo-counts.

    ``mu_hat = (prior_mean + sum x) / (t + 1)`` and
    ``sigma2_hat = (prior_var + sum (x_i - mu_hat_i)**2) / (t + 1)``,
    where ``mu_hat_i`` already includes ``x_i``.
    """

    t: int = 0
    sum_x: float = 0.0
    sum_sq_dev: float = 0.0
    prior_mean: float = 0.5
    prior_var: float = 0.25

    @property
    def mu_hat(self) -> float:
        return (self.prior_mean + self.sum_x) / (self.t + 1)

    @property
    def sigma2_hat(self) -> float:
        return (self.prior_var + self.sum_sq_dev) / (self.t + 1)


def update_moments(state: RunningMoments, x: float) -> RunningMoments:
    """Fold one observation in [0, 1] into ``state``."""
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"observation {x!r} is outside [0, 1]")
    t = state.t + 1
    sum_x = state.sum_x + x
    mu = (state.prior_mean + sum_x) / (t + 1)
    dev = (x - mu) ** 2
    return replace(state, t=t, sum_x=sum_x, sum_sq_dev=state.sum_sq_dev + dev)


def running_moments(xs, prior_mean: float = 0.5, prior_var: float = 0.25):
    """Vectorized moments along a stream.

    Returns
    -------
    mu_hat, sigma2_hat : ndarray, shape (n + 1,)
        Entry ``t`` is the estimate after ``t`` observations (entry 0 is the prior).
    """
    xs = np.asarray(xs, dtype=float)
    n = xs.size
    denom = np.arange(1, n + 2, dtype=float)
    csum = np.concatenate(([0.0], np.cumsum(xs)))
    mu = (prior_mean + csum) / denom
    dev = (xs - mu[1:]) ** 2
    ssd = np.concatenate(([0.0], np.cumsum(dev)))
    sigma2 = (prior_var + ssd) / denom
    return mu, sigma2


# ---------------------------------------------------------------------------
# Lambda schedules
# ---------------------------------------------------------------------------

SCHEDULE_KINDS = ("pm-h", "pm-eb", "va-eb", "pm-pm", "constant")
_ALIASES = {"pm±": "pm-pm", "pmpm": "pm-pm", "pm+-": "pm-pm", "hoeffding": "pm-h"}


@dataclass(frozen=True)
class LambdaSchedule:
    """A predictable lambda sequence.

    Parameters
    ----------
    kind : str
        One of ``pm-h``, ``pm-eb``, ``va-eb``, ``pm-pm`` (the uncapped hedged
        choice) or ``constant``.
    c : float
        Truncation level for ``pm-eb`` and ``va-eb``.
    horizon : int, optional
        Fixed sample size. Required by ``va-eb``; turns ``pm-pm`` and ``pm-h``
        into their fixed-time variants.
    value : float
        Bet size for ``constant``.
    """

    kind: str = "pm-pm"
    c: float = 0.5
    horizon: Optional[int] = None
    value: float = 0.0

    def __post_init__(self):
        kind = _ALIASES.get(self.kind.lower(), self.kind.lower())
        if kind not in SCHEDULE_KINDS:
            raise ConfigError(f"unknown schedule kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if not 0.0 < self.c <= 1.0:
            raise ConfigError(f"cap c must lie in (0, 1], got {self.c}")
        if kind == "va-eb" and self.horizon is None:
            raise ConfigError("va-eb schedule requires a horizon n")
        if self.horizon is not None and self.horizon < 1:
            raise ConfigError("horizon must be a positive integer")


def _schedule_formula(sched: LambdaSchedule, t, sigma2_prev, alpha: float):
    l2a = np.log(2.0 / alpha)
    n = sched.horizon
    kind = sched.kind
    if kind == "constant":
        return np.full(np.shape(t), float(sched.value))
    if kind == "pm-h":
        if n is not None:
            return np.minimum(np.sqrt(8.0 * l2a / n) + 0.0 * t, 1.0)
        return np.minimum(np.sqrt(8.0 * l2a / (t * np.log(t + 1.0))), 1.0)
    if kind == "pm-eb":
        return np.minimum(np.sqrt(2.0 * l2a / (sigma2_prev * t * np.log1p(t))), sched.c)
    if kind == "va-eb":
        return np.minimum(np.sqrt(2.0 * l2a / (n * sigma2_prev)), sched.c)
    # pm-pm
    if n is not None:
        return np.sqrt(2.0 * l2a / (n * sigma2_prev))
    return np.sqrt(2.0 * l2a / (sigma2_prev * t * np.log1p(t)))


def schedule_next(sched: LambdaSchedule, state: RunningMoments, alpha: float) -> float:
    """Emit the bet for time ``state.t + 1`` from data strictly before it."""
    alpha = check_alpha(alpha)
    t = float(state.t + 1)
    return float(_schedule_formula(sched, t, state.sigma2_hat, alpha))


def schedule_array(sched: LambdaSchedule, xs, alpha: float, prior_var: float = 0.25) -> np.ndarray:
    """All emissions ``lambda_1..lambda_n`` for a stream, each predictable."""
    alpha = check_alpha(alpha)
    xs = np.asarray(xs, dtype=float)
    _, sigma2 = running_moments(xs, prior_var=prior_var)
    t = np.arange(1, xs.size + 1, dtype=float)
    return np.asarray(_schedule_formula(sched, t, sigma2[:-1], alpha), dtype=float)


# ---------------------------------------------------------------------------
# Fan-type lower bounds on log(1 + lam * y)
# ---------------------------------------------------------------------------

def fan_bound(y, lam, m=0.5, mode: str = "basic"):
    """Lower bound on ``log(1 + lam * y)``.

    Parameters
    ----------
    y, lam : float or array_like
    m : float or array_like
        Centering used by the ``pos`` and ``neg`` modes.
    mode : {"basic", "pos", "neg"}
        ``basic``: y >= -1, lam in [0, 1).
        ``pos``: y >= -m, lam in [0, 1/m).
        ``neg``: y <= 1 - m, lam in (-1/(1-m), 0].
    """
    y = np.asarray(y, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if mode == "basic":
        if np.any(y < -1.0):
            raise DomainError("basic mode requires y >= -1")
        return _squeeze(lam * y - 4.0 * psi_e(lam) * y * y)
    m = np.asarray(m, dtype=float)
    if np.any(~((m > 0.0) & (m < 1.0))):
        raise DomainError("m must lie in (0, 1)")
    with np.errstate(divide="ignore"):
        if mode == "pos":
            if np.any(y < -m) or np.any(~((lam >= 0.0) & (lam < 1.0 / m))):
                raise DomainError("pos mode requires y >= -m and 0 <= lambda < 1/m")
            return _squeeze(lam * y + (y * y / m**2) * (np.log1p(-m * lam) + m * lam))
        if mode == "neg":
            k = 1.0 - m
            if np.any(y > k) or np.any(~((lam > -1.0 / k) & (lam <= 0.0))):
                raise DomainError("neg mode requires y <= 1-m and -1/(1-m) < lambda <= 0")
            return _squeeze(lam * y + (y * y / k**2) * (np.log1p(k * lam) - k * lam))
    raise ConfigError(f"unknown fan_bound mode {mode!r}")


def _squeeze(a):
    a = np.asarray(a)
    return float(a) if a.ndim == 0 else a


# ---------------------------------------------------------------------------
# Grid helpers
# ---------------------------------------------------------------------------

def make_grid(size: int = 1000) -> np.ndarray:
    """``size + 1`` points ``0, 1/size, ..., 1`` (spacing ``1/size``)."""
    size = int(size)
    if size < 2:
        raise ConfigError("grid needs at least 2 intervals")
    return np.arange(size + 1, dtype=float) / size


def hull_from_mask(grid: np.ndarray, mask: np.ndarray, lo_default: float = 0.0,
                   hi_default: float = 1.0):
    """Convex hull of surviving grid points widened to the neighbouring grid points.

    ``mask`` may be 2-D with time along axis 0.  Returns ``(lo, hi)`` arrays; rows with
    no survivor get ``lo = nan``, ``hi = nan``.
    """
    mask = np.atleast_2d(mask)
    g = grid.size
    any_ = mask.any(axis=1)
    first = np.argmax(mask, axis=1)
    last = g - 1 - np.argmax(mask[:, ::-1], axis=1)
    lo = np.where(first > 0, grid[np.maximum(first - 1, 0)], lo_default)
    hi = np.where(last < g - 1, grid[np.minimum(last + 1, g - 1)], hi_default)
    lo = np.where(any_, lo, np.nan)
    hi = np.where(any_, hi, np.nan)
    return lo, hi


def is_contiguous(mask: np.ndarray) -> np.ndarray:
    """Whether the True entries of each row form a single run."""
    mask = np.atleast_2d(mask).astype(np.int8)
    starts = (np.diff(mask, axis=1) == 1).sum(axis=1) + mask[:, 0]
    return starts <= 1


# ---------------------------------------------------------------------------
# Confidence sequence records
# ---------------------------------------------------------------------------

@dataclass
class ConfSeqRecord:
    """Per-time bounds for times ``1..n``.

    Empty sets are stored as ``nan`` bounds.  ``lower_int``/``upper_int`` hold the
    running intersection.
    """

    lower: np.ndarray
    upper: np.ndarray
    method: str
    alpha: float
    contiguous: Optional[np.ndarray] = None

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        self.lower_int = np.maximum.accumulate(self.lower) if self.lower.size else self.lower
        self.upper_int = np.minimum.accumulate(self.upper) if self.upper.size else self.upper

    def __len__(self) -> int:
        return self.lower.size

    def interval(self, t: int, intersected: bool = False) -> Interval:
        """Set at time ``t`` (``t = 0`` is the trivial set)."""
        if t == 0:
            return Interval(0.0, 1.0)
        lo, hi = (self.lower_int, self.upper_int) if intersected else (self.lower, self.upper)
        return Interval(float(lo[t - 1]), float(hi[t - 1]))

    def widths(self, intersected: bool = False) -> np.ndarray:
        lo, hi = (self.lower_int, self.upper_int) if intersected else (self.lower, self.upper)
        w = hi - lo
        return np.where(np.isnan(w) | (w < 0), 0.0, w)

    def covers(self, m: float, intersected: bool = False) -> np.ndarray:
        lo, hi = (self.lower_int, self.upper_int) if intersected else (self.lower, self.upper)
        return (lo <= m) & (m <= hi)
