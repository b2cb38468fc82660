import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bettingcs.core import ConfigError, LambdaSchedule, psi_e, schedule_array
from bettingcs.supermg import (
    eb_weights,
    permuted_eb_ci,
    pm_center_margin,
    pm_eb_cs,
    pm_hoeffding_cs,
    pm_log_process,
    pm_two_sided_log_process,
    va_eb_ci,
)

from oracles import expect_over_paths, hoeffding_half_width


def test_fixed_lambda_recovers_hoeffding():
    n, alpha = 100, 0.05
    lam = math.sqrt(8 * math.log(2 / alpha) / n)
    xs = np.r_[np.ones(60), np.zeros(40)]
    center, margin = pm_center_margin(xs, alpha, np.full(n, lam), "h")
    assert center[-1] == pytest.approx(0.6, abs=1e-12)
    assert margin[-1] == pytest.approx(hoeffding_half_width(n, alpha), abs=1e-12)
    assert margin[-1] == pytest.approx(0.13581015157406195, abs=1e-12)


def test_eb_single_observation_margin():
    _, margin = pm_center_margin([1.0], 0.05, [0.5], "eb")
    assert eb_weights([1.0])[0] == 1.0
    assert margin[0] == pytest.approx((math.log(40) + psi_e(0.5)) / 0.5, rel=1e-12)
    assert margin[0] == pytest.approx(7.474332498507845, rel=1e-12)


def test_eb_margin_below_hoeffding_on_constant_stream():
    xs = np.full(100, 0.25)
    lam = schedule_array(LambdaSchedule("pm-eb"), xs, 0.05)
    _, m_eb = pm_center_margin(xs, 0.05, lam, "eb")
    _, m_h = pm_center_margin(xs, 0.05, lam, "h")
    assert m_eb[-1] < m_h[-1]


def test_pm_h_width_is_data_free():
    a = pm_hoeffding_cs(np.zeros(200))
    b = pm_hoeffding_cs(np.random.default_rng(1).random(200))
    wa = a.upper - a.lower
    wb = b.upper - b.lower
    interior = (a.lower > 0) & (a.upper < 1) & (b.lower > 0) & (b.upper < 1)
    _, ma = pm_center_margin(np.zeros(200), 0.05,
                             schedule_array(LambdaSchedule("pm-h"), np.zeros(200), 0.05))
    _, mb = pm_center_margin(np.ones(200), 0.05,
                             schedule_array(LambdaSchedule("pm-h"), np.ones(200), 0.05))
    np.testing.assert_array_equal(ma, mb)
    np.testing.assert_allclose(wa[interior], wb[interior], atol=1e-12)


def test_bad_inputs():
    with pytest.raises(ValueError):
        pm_hoeffding_cs([])
    with pytest.raises(ConfigError):
        pm_hoeffding_cs([0.5, 0.5], lambdas=[0.1, 0.0])
    with pytest.raises(ValueError):
        pm_eb_cs([0.5, 1.5])


@pytest.mark.parametrize("m", [0.3, 0.5])
@pytest.mark.parametrize("kind", ["h", "eb"])
def test_pm_processes_supermartingale_enumeration(m, kind):
    t = 10
    sched = LambdaSchedule("pm-h" if kind == "h" else "pm-eb")

    for side in (1, -1):
        def path_side(xs, side=side):
            lam = schedule_array(sched, xs, 0.05)
            return np.exp(pm_log_process(xs, m, lam, kind, side)[:, 0])
        assert np.all(expect_over_paths(m, t, path_side) <= 1 + 1e-12)


def test_two_sided_threshold_matches_closed_form():
    rng = np.random.default_rng(3)
    xs = rng.beta(2, 5, 300)
    lam = schedule_array(LambdaSchedule("pm-eb"), xs, 0.05)
    rec = pm_eb_cs(xs, 0.05)
    grid = np.linspace(0.001, 0.999, 999)
    inside = pm_two_sided_log_process(xs, grid, lam, "eb")[-1] < math.log(20)
    lo, hi = rec.lower[-1], rec.upper[-1]
    expect = (grid > lo) & (grid < hi)
    near = (np.abs(grid - lo) < 1e-9) | (np.abs(grid - hi) < 1e-9)
    assert np.array_equal(inside[~near], expect[~near])


def test_va_eb_width_scaling():
    rng = np.random.default_rng(11)
    n = 10**4
    xs = rng.beta(10, 30, n)
    iv = va_eb_ci(xs, 0.05)
    sigma = math.sqrt(10 * 30 / (40**2 * 41))
    target = sigma * math.sqrt(2 * math.log(40))
    assert math.sqrt(n) * iv.width / 2 == pytest.approx(target, rel=0.15)


def test_va_eb_constant_half():
    iv = va_eb_ci(np.full(100, 0.5))
    assert 0.5 in iv and iv.width < 0.2


def test_permuted_eb_contains_mean():
    rng = np.random.default_rng(5)
    hits = 0
    for r in range(20):
        xs = (rng.random(200) < 0.5).astype(float)
        iv = permuted_eb_ci(xs, 0.05, B=5, seed=r, grid_size=200)
        hits += xs.mean() in iv
    assert hits == 20


def test_permuted_eb_deterministic_given_seed():
    xs = np.random.default_rng(0).random(100)
    assert permuted_eb_ci(xs, seed=4, grid_size=200) == permuted_eb_ci(xs, seed=4, grid_size=200)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=60), st.sampled_from([0.01, 0.05, 0.2]))
def test_cs_is_inside_unit_interval_and_nested(xs, alpha):
    for rec in (pm_hoeffding_cs(xs, alpha), pm_eb_cs(xs, alpha)):
        assert np.all((0 <= rec.lower) & (rec.lower <= rec.upper) & (rec.upper <= 1))
        assert np.all(np.diff(rec.lower_int) >= 0) and np.all(np.diff(rec.upper_int) <= 0)
