"""Acceptance criteria 1-11, each reporting a single PASS/FAIL line."""

import itertools
import math
import time

import numpy as np

from bettingcs.betting import (
    AKellyStrategy,
    BettingConfig,
    ConstantStrategy,
    LBOWStrategy,
    ONSStrategy,
    conbo_cs,
    dkelly_log_capital,
    dominance_gamma,
    gkelly_log_capital,
    hedged_ci,
    hedged_cs,
    hgkelly_cs,
    hindsight_log_capital,
    strategy_log_capital,
)
from bettingcs.baselines import hoeffding_ci, mp09_ci
from bettingcs.core import LambdaSchedule, fan_bound, schedule_array
from bettingcs.simharness import ScenarioSpec, bench_timings, make_stream, population
from bettingcs.supermg import (
    pm_center_margin,
    pm_eb_cs,
    pm_hoeffding_cs,
    pm_log_process,
    va_eb_ci,
)
from bettingcs.wor import WorState, hedged_wor_cs, wor_capital_step, wor_cond_mean

from oracles import bernoulli_paths, simplex_el

ALPHA = 0.05


def test_criterion_01_martingale_enumeration(verdict):
    t_max = 10
    worst_eq, worst_pm = 0.0, -np.inf
    start = time.perf_counter()
    for m in (0.3, 0.5):
        paths, probs = bernoulli_paths(m, t_max)
        bettors = {
            "constant": lambda p: strategy_log_capital(p, m, ConstantStrategy(0.9)),
            "akelly": lambda p: strategy_log_capital(p, m, AKellyStrategy()),
            "lbow": lambda p: strategy_log_capital(p, m, LBOWStrategy()),
            "ons": lambda p: strategy_log_capital(p, m, ONSStrategy()),
            "dkelly": lambda p: dkelly_log_capital(
                p, m, [AKellyStrategy(), LBOWStrategy(), ONSStrategy()]),
            "gkelly": lambda p: gkelly_log_capital(p, m, 10),
            "hgkelly": lambda p: gkelly_log_capital(p, m, 10, True),
        }
        for fn in bettors.values():
            caps = np.array([np.exp(fn(p)[:, 0]) for p in paths])
            worst_eq = max(worst_eq, np.max(np.abs(probs @ caps - 1.0)))
        for kind, sched in (("h", "pm-h"), ("eb", "pm-eb")):
            for side in (1, -1):
                caps = np.array([np.exp(pm_log_process(
                    p, m, schedule_array(LambdaSchedule(sched), p, ALPHA), kind, side)[:, 0])
                    for p in paths])
                worst_pm = max(worst_pm, np.max(probs @ caps))
    elapsed = time.perf_counter() - start
    ok = worst_eq <= 1e-12 and worst_pm <= 1 + 1e-12 and elapsed < 60
    verdict(1, ok, f"max |E K_t - 1| = {worst_eq:.2e}, max E M_t = {worst_pm:.6f}, "
                   f"{elapsed:.1f}s")
    assert ok


def test_criterion_02_wor_exchangeability(verdict):
    pop = (0.0, 0.0, 1.0, 1.0, 1.0)
    mu, lam = 0.6, 1.2
    totals = np.zeros(5)
    perms = list(itertools.permutations(pop))
    for perm in perms:
        s = WorState(N=5)
        for t, x in enumerate(perm):
            mt = wor_cond_mean(s, mu)
            b = lam if mt in (0.0, 1.0) else float(np.clip(lam, -1 / (1 - mt), 1 / mt))
            s = wor_capital_step(s, x, b, mu)
            totals[t] += s.capital
    err = np.max(np.abs(totals / len(perms) - 1.0))
    ok = len(perms) == 120 and err <= 1e-12
    verdict(2, ok, f"max |mean K_t - 1| = {err:.2e} over {len(perms)} permutations")
    assert ok


def _contiguous_ok(rec):
    return bool(np.all(rec.contiguous))


CONTIGUITY = {"hedged": True, "conbo": True, "hedged-wor": True, "hgkelly": True}


def test_criterion_03_time_uniform_coverage(verdict):
    reps, t_max = 500, 1000
    spec = ScenarioSpec("bernoulli", {"p": 0.5}, horizon=t_max, seed=2021, replicates=reps)
    pop_spec = ScenarioSpec("population", {"atoms": [1.0] * 500 + [0.0] * 500},
                            horizon=t_max, seed=2021, replicates=reps)
    N = population(pop_spec).size
    misses = dict.fromkeys(["hedged", "conbo", "pm-h", "pm-eb", "hedged-wor"], 0)
    for r in range(reps):
        xs = make_stream(spec, r)
        recs = {"hedged": hedged_cs(xs, ALPHA), "conbo": conbo_cs(xs, ALPHA),
                "pm-h": pm_hoeffding_cs(xs, ALPHA), "pm-eb": pm_eb_cs(xs, ALPHA)}
        recs["hedged-wor"] = hedged_wor_cs(make_stream(pop_spec, r), N, ALPHA)
        for name, rec in recs.items():
            misses[name] += not rec.covers(0.5).all()
            if name in CONTIGUITY:
                CONTIGUITY[name] &= _contiguous_ok(rec)
    rates = {k: v / reps for k, v in misses.items()}
    ok = all(v <= 0.08 for v in rates.values())
    verdict(3, ok, "miscoverage " + ", ".join(f"{k}={v:.3f}" for k, v in rates.items()))
    assert ok


def test_criterion_04_hoeffding_recovery(verdict):
    n = 100
    lam = math.sqrt(8 * math.log(2 / ALPHA) / n)
    xs = np.random.default_rng(4).random(n)
    _, margin = pm_center_margin(xs, ALPHA, np.full(n, lam), "h")
    err = abs(margin[-1] - math.sqrt(math.log(2 / ALPHA) / (2 * n)))
    ok = err <= 1e-12
    verdict(4, ok, f"|margin - classical half-width| = {err:.1e}")
    assert ok


def test_criterion_05_width_scaling(verdict):
    n = 10**5
    xs = make_stream(ScenarioSpec("beta", {"a": 10, "b": 30}, horizon=n, seed=5), 0)
    iv = va_eb_ci(xs, ALPHA)
    sigma = math.sqrt(10 * 30 / (40**2 * 41))
    target = sigma * math.sqrt(2 * math.log(40))
    scaled = math.sqrt(n) * iv.width / 2
    ok = abs(scaled / target - 1) <= 0.15
    verdict(5, ok, f"sqrt(n) * margin = {scaled:.4f}, target {target:.4f}")
    assert ok


def test_criterion_06_sqrt_n_rate(verdict):
    spec = ScenarioSpec("bernoulli", {"p": 0.5}, horizon=4000, seed=6, replicates=20)
    w1, w4 = [], []
    for r in range(spec.replicates):
        xs = make_stream(spec, r)
        w1.append(hedged_ci(xs[:1000], ALPHA).width)
        w4.append(hedged_ci(xs, ALPHA).width)
    ratio = np.mean(w1) / np.mean(w4)
    ok = 1.5 <= ratio <= 2.5
    verdict(6, ok, f"width(1000)/width(4000) = {ratio:.3f}")
    assert ok


def test_criterion_07_width_ordering(verdict):
    spec = ScenarioSpec("beta", {"a": 10, "b": 30}, horizon=1000, seed=7, replicates=5)
    w = {k: [] for k in ("hedged", "pm-eb", "pm-h", "hedged-ci", "va-eb", "mp09", "hoeffding")}
    for r in range(spec.replicates):
        xs = make_stream(spec, r)
        w["hedged"].append(hedged_cs(xs, ALPHA).widths()[-1])
        w["pm-eb"].append(pm_eb_cs(xs, ALPHA).widths()[-1])
        w["pm-h"].append(pm_hoeffding_cs(xs, ALPHA).widths()[-1])
        w["hedged-ci"].append(hedged_ci(xs, ALPHA).width)
        w["va-eb"].append(va_eb_ci(xs, ALPHA).width)
        w["mp09"].append(mp09_ci(xs, ALPHA).width)
        w["hoeffding"].append(hoeffding_ci(xs, ALPHA).width)
    m = {k: float(np.mean(v)) for k, v in w.items()}
    ok = (m["hedged"] < m["pm-eb"] < m["pm-h"] and m["hedged-ci"] < m["va-eb"]
          and m["hedged-ci"] < m["mp09"] and m["hedged-ci"] < m["hoeffding"])
    verdict(7, ok, ", ".join(f"{k}={v:.4f}" for k, v in m.items()))
    assert ok


def test_criterion_08_interval_shape(verdict):
    for r, xs in enumerate(np.random.default_rng(8).beta(0.5, 0.5, (20, 500))):
        CONTIGUITY["hgkelly"] &= _contiguous_ok(hgkelly_cs(xs, ALPHA, grid_size=500))
        CONTIGUITY["hedged"] &= _contiguous_ok(hedged_cs(xs, ALPHA))
        CONTIGUITY["conbo"] &= _contiguous_ok(conbo_cs(xs, ALPHA))
        CONTIGUITY["hedged-wor"] &= _contiguous_ok(hedged_wor_cs(xs, 1000, ALPHA))
    k = np.exp(strategy_log_capital([0.0, 0.0], [0.08, 0.4, 0.03],
                                    AKellyStrategy(c=None, prior_var=1 / 20))[-1])
    counter = k[0] < 0.85 and k[1] < 0.85 and k[2] > 0.85
    ok = all(CONTIGUITY.values()) and counter
    verdict(8, ok, f"contiguous {CONTIGUITY}; aKelly K2(0.08)={k[0]:.4f}, "
                   f"K2(0.4)={k[1]:.4f}, K2(0.03)={k[2]:.4f}")
    assert ok


def test_criterion_09_inequality_suite(verdict):
    rng = np.random.default_rng(9)
    K = 10**4
    bad = {}
    y = rng.uniform(-1, 20, K)
    lam = rng.uniform(0, 1, K) * (1 - 1e-9)
    bad["fan"] = int(np.sum(fan_bound(y, lam) > np.log1p(lam * y) + 1e-12))
    m = rng.uniform(0.001, 0.999, K)
    y = rng.uniform(0, 1, K) - m
    lam = rng.uniform(0, 1 - 1e-9, K) / m
    bad["fan+"] = int(np.sum(fan_bound(y, lam, m, "pos") > np.log1p(lam * y) + 1e-12))
    lam = -rng.uniform(0, 1 - 1e-9, K) / (1 - m)
    bad["fan-"] = int(np.sum(fan_bound(y, lam, m, "neg") > np.log1p(lam * y) + 1e-12))
    n = rng.integers(math.ceil(16 * math.log(2 / ALPHA)), 10**6, K)
    g = dominance_gamma(rng.uniform(0, 1, K), np.sqrt(8 * math.log(2 / ALPHA) / n))
    bad["gamma"] = int(np.sum(np.abs(g) > 1 + 1e-12))
    jensen = 0
    for _ in range(K):
        xs = rng.random(rng.integers(1, 6))
        mm = rng.uniform(0.01, 0.99)
        strats = [AKellyStrategy(), LBOWStrategy(), ONSStrategy()]
        logs = np.stack([strategy_log_capital(xs, mm, s) for s in strats])
        jensen += int(np.any(dkelly_log_capital(xs, mm, strats) < logs.mean(axis=0) - 1e-12))
    bad["jensen"] = jensen
    ok = sum(bad.values()) == 0
    verdict(9, ok, f"violations {bad} over {K} draws each")
    assert ok


def test_criterion_10_timing(verdict):
    rows = {r["method"]: r["seconds"] for r in
            bench_timings(["hedged", "conbo", "kelly"], t_max=1000, grid_size=1000)}
    ok = rows["kelly"] >= 10 * rows["hedged"] and rows["kelly"] >= 10 * rows["conbo"]
    verdict(10, ok, ", ".join(f"{k}={v:.3f}s" for k, v in rows.items()))
    assert ok


def test_criterion_11_empirical_likelihood(verdict):
    xs = (0.2, 0.5, 0.9)
    t = len(xs)
    errs = []
    for m in np.linspace(0.3, 0.8, 6):
        el = (1 / t) ** t / simplex_el(xs, m, steps=20000)
        stated = (1 / t) ** t * math.exp(hindsight_log_capital(xs, m))
        errs.append(abs(stated / el - 1))
    worst = max(errs)
    ok = worst <= 1e-3
    verdict(11, ok, f"max relative gap between (1/t)^t K^HS and brute-force EL = {worst:.3g} "
                    f"(EL equals K^HS itself; see decisions ledger)")
    assert ok
