"""Capital processes, betting strategies, hedged and ConBo confidence sequences."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .core import (
    ConfigError,
    ConfSeqRecord,
    DomainError,
    Interval,
    LambdaSchedule,
    RunningMoments,
    check_alpha,
    check_unit_data,
    hull_from_mask,
    is_contiguous,
    make_grid,
    running_moments,
    schedule_array,
    update_moments,
)

ONS_RATE = 2.0 / (2.0 - np.log(3.0))
_TOL = 1e-12


@dataclass
class BettingConfig:
    """Settings shared by the hedged and ConBo constructions.

    Parameters
    ----------
    theta : float
        Fraction of initial wealth on the bet that the mean exceeds ``m``.
    c : float
        Truncation level in (0, 1].
    grid_size : int
        Number of grid intervals on [0, 1].
    schedule : LambdaSchedule, optional
        Source of the m-free magnitudes; defaults to ``pm-pm``.
    sum_form : bool
        Use ``theta K+ + (1-theta) K-`` instead of the max.
    inner : str
        Inner strategy for ConBo.
    """

    theta: float = 0.5
    c: float = 0.5
    grid_size: int = 1000
    schedule: Optional[LambdaSchedule] = None
    sum_form: bool = False
    inner: str = "lbow"

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ConfigError("theta must lie in [0, 1]")
        if not 0.0 < self.c <= 1.0:
            raise ConfigError("c must lie in (0, 1]")
        if int(self.grid_size) < 2:
            raise ConfigError("grid needs at least 2 intervals")


# ---------------------------------------------------------------------------
# Single capital process
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CapitalState:
    """Log-wealth of one bettor at a fixed ``m``."""

    log_capital: float = 0.0
    t: int = 0

    @property
    def capital(self) -> float:
        return float(np.exp(self.log_capital))


def log_factor(x, lam, m):
    """``log(1 + lam (x - m))`` with ``-inf`` for a zero factor."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log1p(lam * (x - m))


def capital_step(state: CapitalState, x: float, lam: float, m: float) -> CapitalState:
    """Multiply the wealth by ``1 + lam (x - m)``."""
    if not 0.0 < m < 1.0:
        raise DomainError("capital_step needs m in (0, 1); use reject_at_endpoint")
    if not (-1.0 / (1.0 - m) - _TOL <= lam <= 1.0 / m + _TOL):
        raise DomainError(f"bet {lam} outside [-1/(1-m), 1/m]")
    factor = 1.0 + lam * (x - m)
    step = float(np.log(factor)) if factor > 0.0 else -np.inf
    return CapitalState(state.log_capital + step, state.t + 1)


def reject_at_endpoint(x_seen_max: float, x_seen_min: float, m: float) -> bool:
    """Decide the null ``mean = m`` for ``m`` in {0, 1}.

    A [0, 1]-valued variable with mean 0 (or 1) is almost surely constant.
    """
    if m == 0.0:
        return x_seen_max > 0.0
    if m == 1.0:
        return x_seen_min < 1.0
    raise DomainError("reject_at_endpoint only handles m in {0, 1}")


def _endpoint_log_capital(xs: np.ndarray, m: float) -> np.ndarray:
    """``+inf`` after the first observation refuting an endpoint null, else 0."""
    hit = np.maximum.accumulate(xs > 0.0) if m == 0.0 else np.maximum.accumulate(xs < 1.0)
    return np.where(hit, np.inf, 0.0)


def _caps(m, c):
    with np.errstate(divide="ignore"):
        return -c / (1.0 - m), c / m


# ---------------------------------------------------------------------------
# Bets
# ---------------------------------------------------------------------------

def akelly_bet(mu_hat: float, sigma2_hat: float, m, c: Optional[float] = 0.5):
    """Approximate Kelly bet ``(mu - m) / (sigma2 + (mu - m)**2)`` truncated to the caps.

    ``c=None`` disables truncation.
    """
    m = np.asarray(m, dtype=float)
    d = mu_hat - m
    lam = d / (sigma2_hat + d * d)
    if c is not None:
        lo, hi = _caps(m, c)
        lam = np.clip(lam, lo, hi)
    return lam


def lbow_bet(mu_hat: float, sigma2_hat: float, m, c: Optional[float] = 0.5):
    """Lower-bound-on-wealth bet."""
    m = np.asarray(m, dtype=float)
    d = mu_hat - m
    omega = np.where(d >= 0, m, 1.0 - m)
    lam = d / (omega * np.abs(d) + sigma2_hat + d * d)
    if c is not None:
        lo, hi = _caps(m, c)
        lam = np.clip(lam, lo, hi)
    return lam


def kelly_bet(history, m, c: float = 0.5, eps: float = 1e-9, tol: float = 1e-10,
              max_iter: int = 200):
    """Root of ``mean((x - m) / (1 + lam (x - m))) = 0`` over the truncation range.

    Bisection on ``[-c/(1-m) + eps, c/m - eps]``; if the score does not change sign
    the nearer truncation bound is returned.  With no history the bet is 0.
    """
    history = np.asarray(history, dtype=float)
    m = np.atleast_1d(np.asarray(m, dtype=float))
    out = np.zeros(m.shape)
    if history.size == 0:
        return out
    y = history[:, None] - m[None, :]
    lo_cap, hi_cap = -c / (1.0 - m), c / m
    a = lo_cap + eps
    b = hi_cap - eps

    def score(lam, cols=slice(None)):
        return np.mean(y[:, cols] / (1.0 + lam * y[:, cols]), axis=0)

    s_a, s_b = score(a), score(b)
    out = np.where(s_b > 0, hi_cap, np.where(s_a < 0, lo_cap, 0.0))
    active = np.flatnonzero((s_a >= 0) & (s_b <= 0) & ~((s_a == 0) & (s_b == 0)))
    a, b = a[active], b[active]
    for _ in range(max_iter):
        if active.size == 0:
            break
        mid = 0.5 * (a + b)
        s = score(mid, active)
        done = (np.abs(s) < tol) | (b - a < 1e-15 * np.maximum(1.0, np.abs(mid)))
        out[active[done]] = mid[done]
        keep = ~done
        pos = s[keep] > 0
        a, b, mid_k = a[keep], b[keep], mid[keep]
        a = np.where(pos, mid_k, a)
        b = np.where(pos, b, mid_k)
        active = active[keep]
    if active.size:
        out[active] = 0.5 * (a + b)
    return out


def bet(strategy: str, state: RunningMoments, m, c: float = 0.5, history=None):
    """Closed-form bets from the moment state (data strictly before the wager).

    Parameters
    ----------
    strategy : {"akelly", "lbow", "kelly", "zero"}
    state : RunningMoments
    m : float or ndarray
    history : array_like, optional
        Past observations, required by ``kelly``.
    """
    if strategy == "akelly":
        return akelly_bet(state.mu_hat, state.sigma2_hat, m, c)
    if strategy == "lbow":
        return lbow_bet(state.mu_hat, state.sigma2_hat, m, c)
    if strategy == "kelly":
        return kelly_bet(np.asarray([] if history is None else history), m, c)
    if strategy == "zero":
        return np.zeros(np.shape(m))
    raise ConfigError(f"unknown strategy {strategy!r}")


# ---------------------------------------------------------------------------
# Per-m strategies with state
# ---------------------------------------------------------------------------

class Strategy:
    """Predictable bettor over an array of candidate means.

    Call ``reset(m)``, then alternate ``bet()`` and ``update(x)``.
    """

    name = "base"

    def __init__(self, c: Optional[float] = 0.5):
        self.c = c

    def reset(self, m) -> None:
        self.m = np.atleast_1d(np.asarray(m, dtype=float))
        self.moments = RunningMoments(prior_var=getattr(self, "prior_var", 0.25))
        self.history: list = []

    def bet(self) -> np.ndarray:
        raise NotImplementedError

    def update(self, x: float) -> None:
        self.moments = update_moments(self.moments, x)
        self.history.append(float(x))


class ConstantStrategy(Strategy):
    name = "constant"

    def __init__(self, value: float = 0.5, c: Optional[float] = None):
        super().__init__(c)
        self.value = value

    def bet(self):
        return np.full(self.m.shape, float(self.value))


class AKellyStrategy(Strategy):
    name = "akelly"

    def __init__(self, c: Optional[float] = 0.5, prior_var: float = 0.25):
        super().__init__(c)
        self.prior_var = prior_var

    def bet(self):
        return akelly_bet(self.moments.mu_hat, self.moments.sigma2_hat, self.m, self.c)


class LBOWStrategy(Strategy):
    name = "lbow"

    def bet(self):
        return lbow_bet(self.moments.mu_hat, self.moments.sigma2_hat, self.m, self.c)


class KellyStrategy(Strategy):
    name = "kelly"

    def bet(self):
        return kelly_bet(self.history, self.m, self.c)


class ONSStrategy(Strategy):
    """Online Newton step on the log-wealth, one learner per candidate mean.

    The first bet is 1, truncated to the caps.
    """

    name = "ons"

    def reset(self, m):
        super().reset(m)
        lo, hi = _caps(self.m, self.c)
        self.lam = np.clip(np.ones(self.m.shape), lo, hi)
        self.a = np.ones(self.m.shape)

    def bet(self):
        return self.lam.copy()

    def update(self, x):
        super().update(x)
        y = x - self.m
        with np.errstate(divide="ignore", invalid="ignore"):
            z = -y / (1.0 + self.lam * y)
        z = np.where(np.isfinite(z), z, 0.0)
        self.a = self.a + z * z
        lo, hi = _caps(self.m, self.c)
        self.lam = np.clip(self.lam - ONS_RATE * z / self.a, lo, hi)


STRATEGIES = {
    "constant": ConstantStrategy,
    "akelly": AKellyStrategy,
    "lbow": LBOWStrategy,
    "kelly": KellyStrategy,
    "ons": ONSStrategy,
}


def make_strategy(name: str, **kwargs) -> Strategy:
    try:
        return STRATEGIES[name](**kwargs)
    except KeyError:
        raise ConfigError(f"unknown strategy {name!r}") from None


def strategy_log_capital(xs, m, strategy: Strategy) -> np.ndarray:
    """Log-capital path of ``strategy`` at each candidate mean.

    Returns shape ``(n, len(m))``; endpoint columns (m in {0, 1}) follow
    ``reject_at_endpoint`` (``+inf`` once refuted, 0 otherwise).
    """
    xs = np.asarray(xs, dtype=float)
    m = np.atleast_1d(np.asarray(m, dtype=float))
    inner = (m > 0.0) & (m < 1.0)
    out = np.zeros((xs.size, m.size))
    strategy.reset(m[inner])
    logk = np.zeros(int(inner.sum()))
    mi = m[inner]
    for t, x in enumerate(xs):
        lam = strategy.bet()
        logk = logk + log_factor(x, lam, mi)
        out[t, inner] = logk
        strategy.update(x)
    for j in np.flatnonzero(~inner):
        out[:, j] = _endpoint_log_capital(xs, m[j])
    return out


def dkelly_log_capital(xs, m, strategies: Sequence[Strategy]) -> np.ndarray:
    """Log of the average capital of several strategies."""
    if len(strategies) == 0:
        raise ConfigError("dKelly needs at least one strategy")
    logs = np.stack([strategy_log_capital(xs, m, s) for s in strategies])
    return logsumexp(logs, axis=0) - np.log(len(strategies))


def dkelly_capital(xs, m, strategies: Sequence[Strategy]):
    """Final average capital of several strategies at ``m``."""
    out = np.exp(dkelly_log_capital(xs, m, strategies)[-1])
    return float(out[0]) if np.ndim(m) == 0 else out


def gkelly_bets(m, G: int, hedged: bool = False):
    """Constant bet grids.

    Plain: ``G`` evenly spaced values on ``[-1/(1-m), 1/m]``.  Hedged: ``g/G`` of the
    full stake on each side, ``g = 1..G``.
    """
    m = np.atleast_1d(np.asarray(m, dtype=float))
    if G < 1:
        raise ConfigError("G must be positive")
    if hedged:
        frac = np.arange(1, G + 1) / G
        return frac[:, None] / m[None, :], -frac[:, None] / (1.0 - m[None, :])
    u = np.linspace(0.0, 1.0, G)[:, None]
    lo, hi = -1.0 / (1.0 - m[None, :]), 1.0 / m[None, :]
    return lo + u * (hi - lo), None


def gkelly_log_capital(xs, m, G: int = 10, hedged: bool = False,
                       theta: float = 0.5) -> np.ndarray:
    """Log-capital path of the (hedged) grid-Kelly bettor, shape ``(n, len(m))``."""
    xs = np.asarray(xs, dtype=float)
    m = np.atleast_1d(np.asarray(m, dtype=float))
    inner = (m > 0.0) & (m < 1.0)
    mi = m[inner]
    out = np.zeros((xs.size, m.size))
    y = xs[:, None, None] - mi[None, None, :]
    if hedged:
        plus, minus = gkelly_bets(mi, G, True)
        lp = np.cumsum(log_factor(xs[:, None, None], plus[None], mi[None, None, :]), axis=0)
        lm = np.cumsum(log_factor(xs[:, None, None], minus[None], mi[None, None, :]), axis=0)
        with np.errstate(divide="ignore"):
            w_p, w_m = np.log(theta / G), np.log((1.0 - theta) / G)
        out[:, inner] = np.logaddexp(logsumexp(lp + w_p, axis=1), logsumexp(lm + w_m, axis=1))
    else:
        lam, _ = gkelly_bets(mi, G, False)
        with np.errstate(divide="ignore", invalid="ignore"):
            lk = np.cumsum(np.log1p(lam[None] * y), axis=0)
        out[:, inner] = logsumexp(lk, axis=1) - np.log(G)
    for j in np.flatnonzero(~inner):
        out[:, j] = _endpoint_log_capital(xs, m[j])
    return out


def gkelly_capital(xs, m, G: int = 10, hedged: bool = False, theta: float = 0.5):
    """Final (hedged) grid-Kelly capital at ``m``."""
    out = np.exp(gkelly_log_capital(xs, m, G, hedged, theta)[-1])
    return float(out[0]) if np.ndim(m) == 0 else out


# ---------------------------------------------------------------------------
# Grid sublevel sets
# ---------------------------------------------------------------------------

def _record_from_masks(grid, masks, method, alpha) -> ConfSeqRecord:
    lo, hi = hull_from_mask(grid, masks)
    return ConfSeqRecord(lo, hi, method, alpha, is_contiguous(masks))


def log_capital_cs(xs, log_capital, grid, alpha: float, method: str) -> ConfSeqRecord:
    """Sublevel-set CS ``{m : K_t(m) < 1/alpha}`` from a precomputed log-capital grid."""
    masks = np.asarray(log_capital) < np.log(1.0 / alpha)
    return _record_from_masks(grid, masks, method, alpha)


def betting_cs(xs, alpha: float = 0.05, strategy: str | Strategy = "akelly",
               grid_size: int = 1000, c: float = 0.5) -> ConfSeqRecord:
    """CS from a single per-m strategy (no hedging), reported as a widened hull."""
    alpha = check_alpha(alpha)
    xs = check_unit_data(xs)
    strat = make_strategy(strategy, c=c) if isinstance(strategy, str) else strategy
    grid = make_grid(grid_size)
    logk = strategy_log_capital(xs, grid, strat)
    return log_capital_cs(xs, logk, grid, alpha, strat.name)


def hgkelly_cs(xs, alpha: float = 0.05, G: int = 10, theta: float = 0.5,
               grid_size: int = 1000) -> ConfSeqRecord:
    """CS from the hedged grid-Kelly capital."""
    alpha = check_alpha(alpha)
    xs = check_unit_data(xs)
    grid = make_grid(grid_size)
    logk = gkelly_log_capital(xs, grid, G, True, theta)
    return log_capital_cs(xs, logk, grid, alpha, "hgkelly")


# ---------------------------------------------------------------------------
# Hedged capital engine (with or without replacement)
# ---------------------------------------------------------------------------

_WOR_EPS = 1e-9


def _wor_means(grid, s_prev, t, N):
    """``(N m - S_{t-1}) / (N - t + 1)`` for rows of times ``t``."""
    return (N * grid[None, :] - s_prev[:, None]) / (N - t[:, None] + 1.0)


def _wor_refuted(grid, s_now, t, N):
    """Whether the remaining population mean implied by ``m`` is impossible."""
    rem = N - t[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (N * grid[None, :] - s_now[:, None]) / rem
    out = (r < -_WOR_EPS) | (r > 1.0 + _WOR_EPS)
    full = np.broadcast_to(rem == 0, out.shape)
    gap = np.abs(grid[None, :] - s_now[:, None] / N) > _WOR_EPS
    return np.where(full, gap, out)


def _combine(lp, lm, theta, sum_form):
    with np.errstate(divide="ignore"):
        a, b = np.log(theta) + lp, np.log1p(-theta) + lm
    return np.logaddexp(a, b) if sum_form else np.maximum(a, b)


def hedged_log_capital(xs, grid, lam_plus, lam_minus=None, c: float = 0.5,
                       theta: float = 0.5, sum_form: bool = False, N: Optional[int] = None,
                       chunk: int = 256):
    """Yield ``(rows, log K)`` blocks of the hedged statistic on ``grid``.

    ``lam_plus``/``lam_minus`` are the m-free magnitudes per time.  With ``N`` the
    centering and caps use the without-replacement conditional mean and impossible
    nulls get ``+inf``.  Without ``N``, grid endpoints follow ``reject_at_endpoint``.
    """
    xs = np.asarray(xs, dtype=float)
    lam_plus = np.abs(np.asarray(lam_plus, dtype=float))
    lam_minus = lam_plus if lam_minus is None else np.abs(np.asarray(lam_minus, dtype=float))
    n = xs.size
    csum = np.concatenate(([0.0], np.cumsum(xs)))
    ends = (grid == 0.0) | (grid == 1.0)
    carry_p = np.zeros(grid.size)
    carry_m = np.zeros(grid.size)
    refuted = np.zeros(grid.size, dtype=bool)
    run_max = np.maximum.accumulate(xs) if n else xs
    run_min = np.minimum.accumulate(xs) if n else xs
    for start in range(0, n, chunk):
        rows = slice(start, min(n, start + chunk))
        x = xs[rows][:, None]
        t = np.arange(rows.start + 1, rows.stop + 1, dtype=float)
        if N is None:
            mm = np.broadcast_to(grid[None, :], (t.size, grid.size))
        else:
            mm = _wor_means(grid, csum[rows.start:rows.stop], t, N)
            bad = np.logical_or.accumulate(_wor_refuted(grid, csum[rows.start + 1:rows.stop + 1], t, N), axis=0)
            bad |= refuted[None, :]
            mm = np.where((mm >= 0.0) & (mm <= 1.0), mm, 0.5)
        with np.errstate(divide="ignore", invalid="ignore"):
            lp_b = np.minimum(lam_plus[rows][:, None], c / mm)
            lm_b = np.minimum(lam_minus[rows][:, None], c / (1.0 - mm))
            fp = np.log1p(lp_b * (x - mm))
            fm = np.log1p(-lm_b * (x - mm))
        fp = np.where(np.isnan(fp), 0.0, fp)
        fm = np.where(np.isnan(fm), 0.0, fm)
        lp = carry_p + np.cumsum(fp, axis=0)
        lm = carry_m + np.cumsum(fm, axis=0)
        carry_p, carry_m = lp[-1], lm[-1]
        stat = _combine(lp, lm, theta, sum_form)
        if N is None:
            if ends.any():
                stat[:, grid == 0.0] = np.where(run_max[rows][:, None] > 0.0, np.inf, 0.0)
                stat[:, grid == 1.0] = np.where(run_min[rows][:, None] < 1.0, np.inf, 0.0)
        else:
            stat = np.where(bad, np.inf, stat)
            refuted = bad[-1]
        yield rows, stat


def _hedged_record(xs, grid, lam, c, theta, sum_form, alpha, method, N=None) -> ConfSeqRecord:
    n = xs.size
    lo = np.empty(n)
    hi = np.empty(n)
    contig = np.empty(n, dtype=bool)
    thr = np.log(1.0 / alpha)
    for rows, stat in hedged_log_capital(xs, grid, lam, None, c, theta, sum_form, N):
        mask = stat < thr
        lo[rows], hi[rows] = hull_from_mask(grid, mask)
        contig[rows] = is_contiguous(mask)
    return ConfSeqRecord(lo, hi, method, alpha, contig)


def hedged_cs(xs, alpha: float = 0.05, config: Optional[BettingConfig] = None) -> ConfSeqRecord:
    """Hedged capital confidence sequence on a grid.

    Parameters
    ----------
    xs : array_like
        Observations in [0, 1].
    alpha : float
    config : BettingConfig, optional

    Returns
    -------
    ConfSeqRecord
        Widened hull of ``{m : K_t(m) < 1/alpha}`` per time, with contiguity flags.
    """
    alpha = check_alpha(alpha)
    xs = check_unit_data(xs)
    cfg = config or BettingConfig()
    sched = cfg.schedule or LambdaSchedule("pm-pm", c=cfg.c)
    lam = schedule_array(sched, xs, alpha)
    grid = make_grid(cfg.grid_size)
    return _hedged_record(xs, grid, lam, cfg.c, cfg.theta, cfg.sum_form, alpha, "hedged")


def hedged_ci(xs, alpha: float = 0.05, config: Optional[BettingConfig] = None) -> Interval:
    """Running intersection at ``n`` of the hedged CS with the fixed-``n`` schedule."""
    xs = check_unit_data(xs)
    n = xs.size
    if n == 0:
        raise ValueError("empty input")
    cfg = config or BettingConfig()
    cfg = BettingConfig(cfg.theta, cfg.c, cfg.grid_size,
                        LambdaSchedule("pm-pm", c=cfg.c, horizon=n), cfg.sum_form, cfg.inner)
    return hedged_cs(xs, alpha, cfg).interval(n, intersected=True)


# ---------------------------------------------------------------------------
# ConBo
# ---------------------------------------------------------------------------

def _inner_bet(inner: str, moments: RunningMoments, history, m: float, c: float) -> float:
    m = min(max(m, 1e-9), 1.0 - 1e-9)
    with np.errstate(divide="ignore", invalid="ignore"):
        return float(np.asarray(bet(inner, moments, np.asarray([m]), c, history)).ravel()[0])


def _conbo_record(xs, grid, alpha, cfg: BettingConfig, method: str, N=None) -> ConfSeqRecord:
    n = xs.size
    c, theta = cfg.c, cfg.theta
    thr = np.log(1.0 / alpha)
    lo_out, hi_out = np.empty(n), np.empty(n)
    contig = np.empty(n, dtype=bool)
    lp = np.zeros(grid.size)
    lm = np.zeros(grid.size)
    refuted = np.zeros(grid.size, dtype=bool)
    l_prev, u_prev = 0.0, 1.0
    moments = RunningMoments()
    s_prev = 0.0
    x_max, x_min = -np.inf, np.inf
    interior = (grid > 0.0) & (grid < 1.0)
    for i, x in enumerate(xs):
        t = i + 1
        lam_p = max(_inner_bet(cfg.inner, moments, xs[:i], l_prev, c), 0.0)
        lam_m = abs(min(_inner_bet(cfg.inner, moments, xs[:i], u_prev, c), 0.0))
        if N is None:
            mm = grid
        else:
            mm = (N * grid - s_prev) / (N - t + 1.0)
            mm = np.where((mm >= 0.0) & (mm <= 1.0), mm, 0.5)
        with np.errstate(divide="ignore", invalid="ignore"):
            fp = np.log1p(np.minimum(lam_p, c / mm) * (x - mm))
            fm = np.log1p(-np.minimum(lam_m, c / (1.0 - mm)) * (x - mm))
        lp += np.where(np.isnan(fp), 0.0, fp)
        lm += np.where(np.isnan(fm), 0.0, fm)
        stat = _combine(lp, lm, theta, cfg.sum_form)
        s_now = s_prev + x
        x_max, x_min = max(x_max, x), min(x_min, x)
        if N is None:
            stat = np.where(interior, stat, 0.0)
            if x_max > 0.0:
                stat[grid == 0.0] = np.inf
            if x_min < 1.0:
                stat[grid == 1.0] = np.inf
        else:
            refuted |= _wor_refuted(grid, np.array([s_now]), np.array([float(t)]), N)[0]
            stat = np.where(refuted, np.inf, stat)
        mask = stat < thr
        lo, hi = hull_from_mask(grid, mask)
        lo_out[i], hi_out[i] = lo[0], hi[0]
        contig[i] = is_contiguous(mask)[0]
        if mask.any():
            idx = np.flatnonzero(mask)
            l_prev, u_prev = float(grid[idx[0]]), float(grid[idx[-1]])
        moments = update_moments(moments, x)
        s_prev = s_now
    return ConfSeqRecord(lo_out, hi_out, method, alpha, contig)


def conbo_cs(xs, alpha: float = 0.05, config: Optional[BettingConfig] = None) -> ConfSeqRecord:
    """Confidence-boundary bets: hedged capital betting against the current CS endpoints.

    The positive side bets ``max(lam_G(l_{t-1}), 0)`` and the negative side
    ``|min(lam_G(u_{t-1}), 0)|``, both capped at ``c/m`` and ``c/(1-m)``.
    """
    alpha = check_alpha(alpha)
    xs = check_unit_data(xs)
    cfg = config or BettingConfig()
    grid = make_grid(cfg.grid_size)
    return _conbo_record(xs, grid, alpha, cfg, "conbo")


# ---------------------------------------------------------------------------
# p-values, e-values
# ---------------------------------------------------------------------------

def _candidate_log_capital(xs, S, method: str, config: BettingConfig, alpha: float):
    S = np.atleast_1d(np.asarray(S, dtype=float))
    if S.size == 0:
        raise ValueError("empty candidate set")
    if method == "hedged":
        sched = config.schedule or LambdaSchedule("pm-pm", c=config.c)
        lam = schedule_array(sched, xs, alpha)
        blocks = [stat for _, stat in
                  hedged_log_capital(xs, S, lam, None, config.c, config.theta, True)]
        return np.concatenate(blocks, axis=0) if blocks else np.zeros((0, S.size))
    if method == "gkelly":
        return gkelly_log_capital(xs, S, 10, False)
    if method == "hgkelly":
        return gkelly_log_capital(xs, S, 10, True, config.theta)
    return strategy_log_capital(xs, S, make_strategy(method, c=config.c))


def p_value(xs, S, method: str = "hedged", alpha: float = 0.05,
            config: Optional[BettingConfig] = None):
    """Anytime-valid p-values ``min(1, sup_{m in S} 1/K_t(m))``.

    Returns
    -------
    p, p_running : ndarray, shape (n + 1,)
        Index ``t`` holds the value after ``t`` observations; ``p_running`` is the
        running minimum.
    """
    xs = check_unit_data(xs)
    logk = _candidate_log_capital(xs, S, method, config or BettingConfig(), alpha)
    worst = logk.min(axis=1) if logk.size else np.zeros(0)
    p = np.concatenate(([1.0], np.minimum(1.0, np.exp(-worst))))
    return p, np.minimum.accumulate(p)


def e_value(xs, S, method: str = "hedged", alpha: float = 0.05,
            config: Optional[BettingConfig] = None) -> np.ndarray:
    """Safe e-values ``inf_{m in S} K_t(m)``; index ``t`` as in :func:`p_value`."""
    xs = check_unit_data(xs)
    logk = _candidate_log_capital(xs, S, method, config or BettingConfig(), alpha)
    worst = logk.min(axis=1) if logk.size else np.zeros(0)
    return np.concatenate(([1.0], np.exp(worst)))


# ---------------------------------------------------------------------------
# Quantiles
# ---------------------------------------------------------------------------

@dataclass
class QuantileCapitalState:
    """Log-capital for the null that ``q`` is the ``p``-quantile."""

    p: float
    q: float
    log_capital: float = 0.0


def quantile_step(state: QuantileCapitalState, x: float, lam: float) -> QuantileCapitalState:
    """Multiply by ``1 + lam (1{x <= q} - p)``."""
    p = state.p
    if not (-1.0 / (1.0 - p) - _TOL <= lam <= 1.0 / p + _TOL):
        raise DomainError("bet outside [-1/(1-p), 1/p]")
    z = 1.0 if x <= state.q else 0.0
    return QuantileCapitalState(p, state.q, state.log_capital + float(log_factor(z, lam, p)))


def quantile_cs(xs, p: float = 0.5, alpha: float = 0.05, q_grid=None, lambdas=None,
                theta: float = 0.5, c: float = 0.5, chunk: int = 256) -> ConfSeqRecord:
    """Confidence sequence for the ``p``-quantile of real-valued data.

    Parameters
    ----------
    xs : array_like
        Real observations (unbounded).
    p : float
        Quantile level in (0, 1).
    q_grid : array_like, optional
        Increasing candidate quantiles; defaults to 1001 points spanning the data.
    lambdas : float or array_like, optional
        Signed predictable bets in ``[-1/(1-p), 1/p]`` for a single capital process.
        When omitted a hedged pair is used with magnitudes
        ``sqrt(2 log(2/alpha) / (p (1-p) t log(1+t)))`` capped at ``c/p`` and ``c/(1-p)``.

    Returns
    -------
    ConfSeqRecord
        Bounds in quantile units; a hull touching the grid edge extends to ``-inf``/``inf``.
    """
    alpha = check_alpha(alpha)
    if not 0.0 < p < 1.0:
        raise DomainError("quantile level p must lie in (0, 1)")
    xs = np.asarray(xs, dtype=float).ravel()
    if q_grid is None:
        q_grid = np.linspace(xs.min(), xs.max(), 1001) if xs.size else np.zeros(1)
    q_grid = np.asarray(q_grid, dtype=float)
    n = xs.size
    thr = np.log(1.0 / alpha)
    lo_out, hi_out = np.empty(n), np.empty(n)
    contig = np.empty(n, dtype=bool)
    if lambdas is not None:
        lam = np.broadcast_to(np.asarray(lambdas, dtype=float), (n,))
        if np.any(lam < -1.0 / (1.0 - p) - _TOL) or np.any(lam > 1.0 / p + _TOL):
            raise DomainError("bets must lie in [-1/(1-p), 1/p]")
    else:
        t = np.arange(1, n + 1, dtype=float)
        mag = np.sqrt(2.0 * np.log(2.0 / alpha) / (p * (1.0 - p) * t * np.log1p(t)))
        lam_p, lam_m = np.minimum(mag, c / p), np.minimum(mag, c / (1.0 - p))
    carry_p = np.zeros(q_grid.size)
    carry_m = np.zeros(q_grid.size)
    for start in range(0, n, chunk):
        rows = slice(start, min(n, start + chunk))
        z = (xs[rows][:, None] <= q_grid[None, :]).astype(float) - p
        with np.errstate(divide="ignore"):
            if lambdas is not None:
                lp = carry_p + np.cumsum(np.log1p(lam[rows][:, None] * z), axis=0)
                stat = lp
            else:
                lp = carry_p + np.cumsum(np.log1p(lam_p[rows][:, None] * z), axis=0)
                lm = carry_m + np.cumsum(np.log1p(-lam_m[rows][:, None] * z), axis=0)
                carry_m = lm[-1]
                stat = _combine(lp, lm, theta, False)
        carry_p = lp[-1]
        mask = stat < thr
        lo, hi = hull_from_mask(q_grid, mask, -np.inf, np.inf)
        lo_out[rows], hi_out[rows] = lo, hi
        contig[rows] = is_contiguous(mask)
    return ConfSeqRecord(lo_out, hi_out, "quantile", alpha, contig)


# ---------------------------------------------------------------------------
# Miscellany
# ---------------------------------------------------------------------------

def dominance_gamma(m, lam):
    """``exp(-m lam - lam**2/8) (exp(lam) - 1)``."""
    m = np.asarray(m, dtype=float)
    lam = np.asarray(lam, dtype=float)
    out = np.exp(-m * lam - lam * lam / 8.0) * np.expm1(lam)
    return float(out) if out.ndim == 0 else out


def hindsight_log_capital(xs, m: float) -> float:
    """Log of the best constant-bet capital in hindsight.

    Infinite when ``m`` lies outside the convex hull of the data.
    """
    xs = np.asarray(xs, dtype=float)
    y = xs - m
    if np.all(y == 0):
        return 0.0
    if y.min() >= 0 or y.max() <= 0:
        return np.inf
    lo = -1.0 / y.max()
    hi = -1.0 / y.min()
    span = hi - lo
    a, b = lo + 1e-12 * span, hi - 1e-12 * span
    lam = brentq(lambda v: np.sum(y / (1.0 + v * y)), a, b, xtol=1e-15, maxiter=500)
    return float(np.sum(np.log1p(lam * y)))
