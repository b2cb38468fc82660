"""Classical comparators: Hoeffding, Maurer-Pontil, Anderson, Bentkus, sub-Bernoulli mixture, WoR."""

from __future__ import annotations

from typing import Optional, Tuple

import numpy as np
from scipy.special import logsumexp, roots_legendre
from scipy.stats import binom

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
from .wor import _check_population


def _nonempty(xs) -> np.ndarray:
    xs = check_unit_data(xs)
    if xs.size == 0:
        raise ValueError("empty input")
    return xs


def _sym(center: float, margin: float) -> Interval:
    return Interval(max(0.0, center - margin), min(1.0, center + margin))


def hoeffding_ci(xs, alpha: float = 0.05) -> Interval:
    """``mean +/- sqrt(log(2/alpha) / 2n)``."""
    alpha = check_alpha(alpha)
    xs = _nonempty(xs)
    n = xs.size
    return _sym(xs.mean(), np.sqrt(np.log(2.0 / alpha) / (2.0 * n)))


def mp09_ci(xs, alpha: float = 0.05) -> Interval:
    """Maurer-Pontil empirical Bernstein interval (unbiased sample variance)."""
    alpha = check_alpha(alpha)
    xs = _nonempty(xs)
    n = xs.size
    if n < 2:
        raise ValueError("mp09_ci needs at least 2 observations")
    var = xs.var(ddof=1)
    l4a = np.log(4.0 / alpha)
    margin = np.sqrt(2.0 * var * l4a / n) + 7.0 * l4a / (3.0 * (n - 1))
    return _sym(xs.mean(), margin)


def anderson_ci(xs, alpha: float = 0.05) -> Interval:
    """Anderson's interval from the DKW band on the empirical CDF."""
    alpha = check_alpha(alpha)
    xs = _nonempty(xs)
    n = xs.size
    z = np.concatenate(([0.0], np.sort(xs), [1.0]))  # z[i] is the i-th order statistic
    i = np.arange(1, n + 1)
    u = np.maximum(i / n - np.sqrt(np.log(2.0 / alpha) / (2.0 * n)), 0.0)
    lower = np.sum(u * (z[n - i + 1] - z[n - i]))
    upper = 1.0 - np.sum(u * (z[i + 1] - z[i]))
    return Interval(float(lower), float(upper))


# ---------------------------------------------------------------------------
# Bentkus
# ---------------------------------------------------------------------------

def bentkus_atoms(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Support and probabilities of a sum of ``n`` copies of G.

    G is -1/4 with probability 4/5 and 1 with probability 1/5.
    """
    k = np.arange(n + 1)
    return -n / 4.0 + 1.25 * k, binom.pmf(k, n, 0.2)


def _bentkus_ratio(values, probs, W, y):
    return np.sum(probs * np.maximum(values - y, 0.0) ** 2) / (W - y) ** 2


def _golden_min(f, a, b, tol=1e-10, iters=200):
    gr = (np.sqrt(5.0) - 1.0) / 2.0
    c, d = b - gr * (b - a), a + gr * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if b - a < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = f(d)
    return min(fc, fd)


def bentkus_bound(n: int, W: float, atoms=None) -> float:
    """``inf_{0 <= y < W} E[(sum G - y)_+^2] / (W - y)^2``."""
    values, probs = atoms if atoms is not None else bentkus_atoms(n)
    if W <= 0.0:
        return np.inf
    f = lambda y: _bentkus_ratio(values, probs, W, y)
    # coarse scan to bracket, then golden-section refinement
    ys = np.linspace(0.0, W, 65)[:-1]
    vals = np.array([f(y) for y in ys])
    j = int(np.argmin(vals))
    a, b = ys[max(j - 1, 0)], min(ys[min(j + 1, ys.size - 1)] + (ys[1] - ys[0]), W * (1 - 1e-12))
    return float(min(vals[j], _golden_min(f, a, b)))


def bentkus_threshold(n: int, level: float) -> float:
    """Smallest ``W`` in [0, n] with ``bentkus_bound(n, W) <= level`` (bisection)."""
    atoms = bentkus_atoms(n)
    lo, hi = 0.0, float(n)
    if bentkus_bound(n, hi, atoms) > level:
        return float(n)
    while hi - lo > 1e-6 * n:
        mid = 0.5 * (lo + hi)
        if bentkus_bound(n, mid, atoms) <= level:
            hi = mid
        else:
            lo = mid
    return hi


def bentkus_ci(xs, alpha: float = 0.05) -> Interval:
    """``mean +/- W / n`` with each tail at level ``alpha / 2`` and variance bound 1/4."""
    alpha = check_alpha(alpha)
    xs = _nonempty(xs)
    n = xs.size
    return _sym(xs.mean(), bentkus_threshold(n, alpha / 2.0) / n)


# ---------------------------------------------------------------------------
# Sub-Bernoulli mixture
# ---------------------------------------------------------------------------

def default_mixture(nodes: int = 64, upper: float = 5.0, rate: float = 1.0):
    """Gauss-Legendre rule on (0, upper] against a truncated exponential prior.

    Returns
    -------
    lambdas, weights : ndarray
        Weights sum to one.
    """
    z, w = roots_legendre(nodes)
    lam = 0.5 * upper * (z + 1.0)
    wt = 0.5 * upper * w * rate * np.exp(-rate * lam)
    return lam, wt / wt.sum()


def _mixture_log(lam, lw, S, t, m, side):
    """Log mixture of ``exp(lam Y_sum - t log(1 - p + p e^lam))`` with ``Y = X`` or ``1 - X``."""
    if side > 0:
        y_sum, p = S, m
    else:
        y_sum, p = t - S, 1.0 - m
    cgf = np.log1p(p[:, None] * np.expm1(lam[None, :]))
    return logsumexp(lam[None, :] * y_sum[:, None] - t[:, None] * cgf + lw[None, :], axis=1)


def bernoulli_mixture_cs(xs, alpha: float = 0.05, mixture=None,
                         grid_size: int = 1000) -> ConfSeqRecord:
    """Two-sided mixture of sub-Bernoulli product processes on a grid.

    The upper side mixes ``prod exp(lam X_i - log(1 - m + m e^lam))`` over the quadrature
    rule, the lower side does the same for ``1 - X`` and ``1 - m``; the sides are joined
    by a union bound (each compared with ``2/alpha``).  Both sides are monotone in ``m``,
    so the grid boundary is located by binary search.
    """
    alpha = check_alpha(alpha)
    xs = check_unit_data(xs)
    lam, wt = mixture if mixture is not None else default_mixture()
    lam = np.asarray(lam, dtype=float)
    wt = np.asarray(wt, dtype=float)
    if lam.size == 0:
        raise ConfigError("empty quadrature")
    lw = np.log(wt)
    grid = make_grid(grid_size)
    g = grid.size
    n = xs.size
    S = np.cumsum(xs)
    t = np.arange(1, n + 1, dtype=float)
    thr = np.log(2.0 / alpha)

    def first_true(pred):
        # smallest index in [0, g] where the monotone predicate holds (g if never)
        a = np.zeros(n, dtype=int)
        b = np.full(n, g)
        while np.any(a < b):
            mid = (a + b) // 2
            ok = pred(np.minimum(mid, g - 1)) & (mid < b)
            b = np.where(ok, mid, b)
            a = np.where(ok | (a >= b), a, mid + 1)
        return a

    # upper side survives for m at or above its boundary, lower side at or below its own
    first = first_true(lambda i: _mixture_log(lam, lw, S, t, grid[i], 1) < thr)
    past = first_true(lambda i: ~(_mixture_log(lam, lw, S, t, grid[i], -1) < thr))
    last = past - 1
    ok = (first <= last) & (first < g)
    lo = np.where(first > 0, grid[np.clip(first - 1, 0, g - 1)], 0.0)
    hi = np.where(last < g - 1, grid[np.clip(last + 1, 0, g - 1)], 1.0)
    return ConfSeqRecord(np.where(ok, lo, np.nan), np.where(ok, hi, np.nan),
                         "bernoulli-mixture", alpha)


# ---------------------------------------------------------------------------
# Without-replacement Hoeffding / empirical Bernstein
# ---------------------------------------------------------------------------

def _wor_terms(xs, N):
    n = xs.size
    i = np.arange(1, n + 1, dtype=float)
    s_prev = np.concatenate(([0.0], np.cumsum(xs)[:-1]))
    return xs + s_prev / (N - i + 1.0), 1.0 + (i - 1.0) / (N - i + 1.0)


def _plain_mean_moments(xs):
    """Plain running mean (1/2 before any data) and its variance analogue."""
    n = xs.size
    t = np.arange(1, n + 1, dtype=float)
    mu = np.cumsum(xs) / t
    mu_prev = np.concatenate(([0.5], mu[:-1]))
    ssd = np.cumsum((xs - mu) ** 2)
    sigma2 = np.concatenate(([0.25], (0.25 + ssd) / (t + 1.0)))
    return mu_prev, sigma2


def wor_baseline_cs(xs, N: int, alpha: float = 0.05, kind: str = "H-WoR",
                    c: float = 0.5) -> ConfSeqRecord:
    """Weighted without-replacement Hoeffding (``H-WoR``) or EB (``EB-WoR``) sequence."""
    alpha = check_alpha(alpha)
    xs = _nonempty(xs)
    n = xs.size
    _check_population(n, N)
    l2a = np.log(2.0 / alpha)
    t = np.arange(1, n + 1, dtype=float)
    kind = kind.upper()
    if kind == "H-WOR":
        lam = np.minimum(np.sqrt(8.0 * l2a / (t * np.log(t + 1.0))), 1.0)
        penalty = psi_h(lam)
    elif kind == "EB-WOR":
        mu_prev, sigma2 = _plain_mean_moments(xs)
        lam = np.minimum(np.sqrt(2.0 * l2a / (sigma2[:-1] * t * np.log1p(t))), c)
        penalty = 4.0 * (xs - mu_prev) ** 2 * psi_e(lam)
    else:
        raise ConfigError(f"unknown kind {kind!r}")
    num, den = _wor_terms(xs, N)
    wden = np.cumsum(lam * den)
    center = np.cumsum(lam * num) / wden
    margin = (np.cumsum(penalty) + l2a) / wden
    return ConfSeqRecord(np.clip(center - margin, 0.0, 1.0), np.clip(center + margin, 0.0, 1.0),
                         kind.lower(), alpha)


def wor_baseline_ci(xs, N: int, n: Optional[int] = None, alpha: float = 0.05,
                    kind: str = "H-WoR", c: float = 0.5) -> Interval:
    """Fixed-``n`` without-replacement Hoeffding or EB interval."""
    alpha = check_alpha(alpha)
    xs = _nonempty(xs)
    n = xs.size if n is None else int(n)
    if n < 1 or n > xs.size:
        raise ConfigError("n must be between 1 and the number of observations")
    _check_population(n, N)
    xs = xs[:n]
    l2a = np.log(2.0 / alpha)
    num, den = _wor_terms(xs, N)
    kind = kind.upper()
    if kind == "H-WOR":
        i = np.arange(1, n + 1, dtype=float)
        corr = np.sum((i - 1.0) / (N - i + 1.0))
        center = num.sum() / den.sum()
        margin = np.sqrt(0.5 * l2a) / (np.sqrt(n) + corr / np.sqrt(n))
        return _sym(float(center), float(margin))
    if kind == "EB-WOR":
        lam = schedule_array(LambdaSchedule("va-eb", c=c, horizon=n), xs, alpha)
        mu, _ = running_moments(xs)
        penalty = 4.0 * (xs - mu[:-1]) ** 2 * psi_e(lam)
        wden = np.sum(lam * den)
        center = np.sum(lam * num) / wden
        margin = (np.sum(penalty) + l2a) / wden
        return _sym(float(center), float(margin))
    raise ConfigError(f"unknown kind {kind!r}")
