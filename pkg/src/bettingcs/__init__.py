"""Betting-based confidence sequences and intervals for bounded means."""

from .core import (
    ConfigError,
    ConfSeqRecord,
    DomainError,
    Interval,
    LambdaSchedule,
    RunningMoments,
    fan_bound,
    make_grid,
    psi_e,
    psi_h,
    schedule_next,
    update_moments,
)
from .supermg import pm_eb_cs, pm_hoeffding_cs, permuted_eb_ci, va_eb_ci
from .betting import (
    BettingConfig,
    conbo_cs,
    e_value,
    hedged_ci,
    hedged_cs,
    p_value,
    quantile_cs,
)
from .wor import conbo_wor_cs, hedged_wor_ci, hedged_wor_cs

__version__ = "0.1.0"
