"""Without-replacement capital processes and confidence sequences."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .betting import BettingConfig, _conbo_record, _hedged_record
from .core import (
    ConfigError,
    ConfSeqRecord,
    DomainError,
    Interval,
    LambdaSchedule,
    check_alpha,
    check_unit_data,
    make_grid,
    schedule_array,
)

_EPS = 1e-12


class PopulationError(ValueError):
    """More observations than the population holds."""


@dataclass(frozen=True)
class WorState:
    """Sampling state for a population of size ``N`` and a candidate mean ``m``.

    ``rejected`` marks a null refuted by logic alone (its capital is treated as infinite).
    """

    N: int
    t: int = 0
    running_sum: float = 0.0
    log_capital: float = 0.0
    rejected: bool = False

    @property
    def capital(self) -> float:
        return np.inf if self.rejected else float(np.exp(self.log_capital))


def _check_population(n: int, N: int) -> None:
    if N < 1:
        raise ConfigError("population size N must be positive")
    if n > N:
        raise PopulationError(f"more observations than population ({n} > N={N})")


def wor_cond_mean(state: WorState, m: float) -> float:
    """Mean of the unseen population if the full mean were ``m``."""
    if state.t >= state.N:
        raise PopulationError("more observations than population")
    return (state.N * m - state.running_sum) / (state.N - state.t)


def wor_capital_step(state: WorState, x: float, lam: float, m: float) -> WorState:
    """Multiply the capital by ``1 + lam (x - m_t)`` with ``m_t`` the conditional mean."""
    mt = wor_cond_mean(state, m)
    nxt = replace(state, t=state.t + 1, running_sum=state.running_sum + x)
    if state.rejected or mt < -_EPS or mt > 1.0 + _EPS:
        return replace(nxt, rejected=True)
    if mt <= _EPS or mt >= 1.0 - _EPS:
        # remaining population is constant
        if abs(x - min(max(mt, 0.0), 1.0)) > _EPS:
            return replace(nxt, rejected=True)
        return nxt
    if not (-1.0 / (1.0 - mt) - _EPS <= lam <= 1.0 / mt + _EPS):
        raise DomainError(f"bet {lam} outside [-1/(1-m_t), 1/m_t]")
    factor = 1.0 + lam * (x - mt)
    step = float(np.log(factor)) if factor > 0.0 else -np.inf
    return replace(nxt, log_capital=state.log_capital + step)


def hedged_wor_cs(xs, N: int, alpha: float = 0.05,
                  config: Optional[BettingConfig] = None) -> ConfSeqRecord:
    """Hedged capital CS for the mean of a finite population sampled without replacement.

    Parameters
    ----------
    xs : array_like
        Sampled values in [0, 1], in draw order.
    N : int
        Population size.
    alpha : float
    config : BettingConfig, optional
        The schedule defaults to ``pm-pm`` on the usual running moments.
    """
    alpha = check_alpha(alpha)
    xs = check_unit_data(xs)
    _check_population(xs.size, N)
    cfg = config or BettingConfig()
    sched = cfg.schedule or LambdaSchedule("pm-pm", c=cfg.c)
    lam = schedule_array(sched, xs, alpha)
    grid = make_grid(cfg.grid_size)
    return _hedged_record(xs, grid, lam, cfg.c, cfg.theta, cfg.sum_form, alpha,
                          "hedged-wor", N)


def hedged_wor_ci(xs, N: int, n: Optional[int] = None, alpha: float = 0.05,
                  config: Optional[BettingConfig] = None) -> Interval:
    """Running intersection at ``n`` with the fixed-``n`` magnitudes."""
    xs = check_unit_data(xs)
    n = xs.size if n is None else int(n)
    if n < 1 or n > xs.size:
        raise ConfigError("n must be between 1 and the number of observations")
    _check_population(n, N)
    xs = xs[:n]
    cfg = config or BettingConfig()
    cfg = BettingConfig(cfg.theta, cfg.c, cfg.grid_size,
                        LambdaSchedule("pm-pm", c=cfg.c, horizon=n), cfg.sum_form, cfg.inner)
    return hedged_wor_cs(xs, N, alpha, cfg).interval(n, intersected=True)


def conbo_wor_cs(xs, N: int, alpha: float = 0.05,
                 config: Optional[BettingConfig] = None) -> ConfSeqRecord:
    """ConBo with the candidate mean replaced by the conditional mean of the unseen units."""
    alpha = check_alpha(alpha)
    xs = check_unit_data(xs)
    _check_population(xs.size, N)
    cfg = config or BettingConfig()
    grid = make_grid(cfg.grid_size)
    return _conbo_record(xs, grid, alpha, cfg, "conbo-wor", N)
