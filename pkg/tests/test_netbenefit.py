from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decarb_incentives.acceptance import (
    CostScenario,
    acceptance_threshold,
    break_even_analysis,
    break_even_year,
    discount_sum,
    net_benefit,
    perturb_thresholds,
    population_thresholds,
)
from decarb_incentives.errors import EmptyPopulation
from decarb_incentives.retrofit import Package, RetrofitOutcome

from .conftest import household

# electricity at 1 USD/kWh makes the annual saving equal to the kWh saved
UNIT = dict(gas_price=1.0, electric_price=1.0)


def _case(saving, install, pkg=Package.JUST_HEAT_PUMP, hid="h"):
    h = household(hid, gas=0.0, summer=0.0, electric=10000.0)
    return h, RetrofitOutcome(hid, pkg, g=0.0, e_prime=10000.0 - saving, install_cost=install,
                              solar_kw=0.0, battery_kwh=0.0)


def _loop_sum(rate, T):
    return sum((1 + rate) ** -t for t in range(T + 1))


def test_no_saving_and_full_incentive_breaks_even():
    h, o = _case(0.0, 12345.0)
    assert net_benefit(h, o, CostScenario(**UNIT), incentive=12345.0) == 0.0


def test_geometric_series_example():
    h, o = _case(2000.0, 20000.0)
    nb = net_benefit(h, o, CostScenario(0.05, 10, **UNIT))
    assert nb == pytest.approx(-2556.6, abs=0.1)


def test_zero_rate_is_undiscounted():
    h, o = _case(750.0, 9000.0)
    assert net_benefit(h, o, CostScenario(0.0, 12, **UNIT), 100.0) == pytest.approx(750 * 13 - 9000 + 100)


def test_threshold_from_net_benefit():
    h, o = _case(2000.0, 1000.0)
    t = acceptance_threshold(h, o, CostScenario(0.05, 10, **UNIT))
    assert t.w == 0.0 and t.accepts_at_zero and t.accepts(0.0)
    h, o = _case(2000.0, 20000.0)
    t = acceptance_threshold(h, o, CostScenario(0.05, 10, **UNIT))
    assert t.w == pytest.approx(2556.6, abs=0.1)
    assert not t.accepts_at_zero
    assert t.accepts(t.w) and not t.accepts(t.w - 0.01)


@settings(max_examples=300, deadline=None)
@given(saving=st.floats(-5000, 5000), install=st.floats(0, 60000), incentive=st.floats(0, 60000),
       rate=st.floats(0, 0.2), T=st.integers(1, 40))
def test_net_benefit_is_linear_in_incentive(saving, install, incentive, rate, T):
    h, o = _case(saving, install)
    s = CostScenario(rate, T, **UNIT)
    # unit slope: the incentive passes straight through to the net benefit
    assert net_benefit(h, o, s, incentive) - net_benefit(h, o, s, 0.0) == pytest.approx(incentive, abs=1e-6)
    w = acceptance_threshold(h, o, s).w
    assert net_benefit(h, o, s, w) >= -1e-6


@settings(max_examples=300, deadline=None)
@given(rate=st.floats(0, 0.5), T=st.integers(0, 60))
def test_discount_sum_matches_loop(rate, T):
    assert discount_sum(rate, T) == pytest.approx(_loop_sum(rate, T), rel=1e-12)


def test_break_even_all_unchanged_households_fail():
    cases = [_case(0.0, 5000.0 + i, hid=f"h{i}") for i in range(4)]
    pop = [c[0] for c in cases]
    outs = {Package.JUST_HEAT_PUMP: [c[1] for c in cases]}
    report = break_even_analysis(pop, outs, CostScenario(**UNIT))
    assert report.fraction_failing == {5: 1.0, 10: 1.0, 15: 1.0}
    assert all(r.break_even_year == math.inf for r in report.rows)


def test_break_even_exactly_at_ten_years():
    s = CostScenario(0.05, 10, **UNIT)
    saving = 1000.0
    h, o = _case(saving, saving * discount_sum(0.05, 10))
    report = break_even_analysis([h], {Package.JUST_HEAT_PUMP: [o]}, s)
    assert report.fraction_failing == {5: 1.0, 10: 0.0, 15: 0.0}
    assert report.rows[0].break_even_year == 10.0


def test_break_even_uses_best_package():
    h, bad = _case(10.0, 50000.0, Package.JUST_HEAT_PUMP)
    _, good = _case(5000.0, 1000.0, Package.FULL_REPLACEMENT)
    report = break_even_analysis([h], {Package.JUST_HEAT_PUMP: [bad], Package.FULL_REPLACEMENT: [good]},
                                 CostScenario(**UNIT))
    assert report.fraction_failing[5] == 0.0
    assert report.rows[0].package is Package.FULL_REPLACEMENT


def test_break_even_empty_population():
    with pytest.raises(EmptyPopulation):
        break_even_analysis([], {}, CostScenario())


@settings(max_examples=200, deadline=None)
@given(saving=st.floats(1, 5000), install=st.floats(1, 80000), rate=st.floats(0, 0.1))
def test_break_even_year_is_first_non_negative_horizon(saving, install, rate):
    T = break_even_year(saving, install, rate)
    if T == math.inf:
        assert saving * _loop_sum(rate, 100) < install
    else:
        T = int(T)
        assert saving * _loop_sum(rate, T) >= install - 1e-6
        if T > 0:
            assert saving * _loop_sum(rate, T - 1) < install + 1e-6


def test_population_thresholds_and_noise(rng):
    cases = [_case(100.0 * i, 3000.0, hid=f"h{i}") for i in range(40)]
    pop = [c[0] for c in cases]
    th = population_thresholds(pop, {Package.JUST_HEAT_PUMP: [c[1] for c in cases]}, CostScenario(**UNIT))
    rows = th[Package.JUST_HEAT_PUMP]
    noisy = perturb_thresholds(rows, 0.2, rng)
    for a, b in zip(rows, noisy):
        if a.w == 0:
            assert b.w == 0
        else:
            assert 0.8 * a.w - 1e-9 <= b.w <= 1.2 * a.w + 1e-9
    assert perturb_thresholds(rows, 0.0, rng) == rows


def test_scenario_validation():
    with pytest.raises(ValueError):
        CostScenario(payback_T=0)
    with pytest.raises(ValueError):
        CostScenario(gas_price=0.0)
    assert CostScenario().with_payback(15).payback_T == 15
    assert np.isclose(discount_sum(0.0, 4), 5.0)
