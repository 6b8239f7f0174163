from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decarb_incentives.errors import EmptyTempProfile
from decarb_incentives.population import PopulationSpec, generate_population
from decarb_incentives.resources import load_profiles
from decarb_incentives.retrofit import (
    KWH_PER_THERM,
    CopModel,
    EquipmentPrices,
    Package,
    Profiles,
    RetrofitParams,
    evaluate_population,
    evaluate_retrofit,
    heating_shares,
    median_heating_gas,
    size_heatpump,
    size_solar_battery,
)

from .conftest import flat_profiles, household

COP = CopModel()
PRICES = EquipmentPrices()


def test_heatpump_at_median_costs_benchmark():
    h = household(gas=1000.0, summer=200.0)
    _, cost = size_heatpump(h, COP, np.zeros(365), median_heating=800.0)
    assert cost == pytest.approx(5250.0)


def test_heatpump_at_three_times_median():
    h = household(gas=2600.0, summer=200.0)
    _, cost = size_heatpump(h, COP, np.zeros(365), median_heating=800.0)
    assert cost == pytest.approx(15750.0)


def test_no_heating_gas_needs_no_heatpump():
    h = household(gas=300.0, summer=300.0)
    assert size_heatpump(h, COP, np.zeros(365), median_heating=800.0) == (0.0, 0.0)


def test_heatpump_energy_at_constant_cop():
    # at 8 degC the COP is exactly the reference value
    h = household(gas=1000.0, summer=0.0)
    kwh, _ = size_heatpump(h, COP, np.full(365, 8.0), median_heating=1000.0)
    assert kwh == pytest.approx(1000.0 * KWH_PER_THERM / 3.0)


def test_solar_sized_to_demand():
    h = household(roof=1000.0)
    kw, battery, cost = size_solar_battery(h, np.full(365, 4.0), 7300.0, PRICES)
    assert kw == pytest.approx(5.0)
    assert kw * PRICES.solar_per_kw == pytest.approx(10010.0)
    assert cost == pytest.approx(10010.0 + battery * PRICES.battery_per_kwh)


def test_solar_limited_by_roof():
    h = household(roof=11.0)
    kw, _, _ = size_solar_battery(h, np.full(365, 4.0), 7300.0, PRICES)
    assert kw == pytest.approx(2.0)


def test_no_roof_no_solar():
    assert size_solar_battery(household(roof=0.0), np.full(365, 4.0), 7300.0, PRICES) == (0.0, 0.0, 0.0)


def test_generation_matching_daytime_demand_needs_no_battery():
    params = RetrofitParams(daytime_fraction=1.0)
    kw, battery, _ = size_solar_battery(household(roof=1000.0), np.full(365, 4.0), 7300.0, PRICES,
                                        params=params)
    assert kw == pytest.approx(5.0)
    assert battery == 0.0


def test_all_electric_heat_pump_costs_only_solar_and_battery():
    h = household(gas=0.0, summer=0.0)
    out = evaluate_retrofit(h, Package.JUST_HEAT_PUMP, COP, PRICES, flat_profiles(), median_heating=800.0)
    assert out.g == 0.0 and out.hp_kwh == 0.0
    assert out.install_cost == pytest.approx(out.solar_kw * PRICES.solar_per_kw
                                             + out.battery_kwh * PRICES.battery_per_kwh)


def test_full_replacement_removes_all_gas():
    h = household(gas=1234.5, summer=234.5)
    out = evaluate_retrofit(h, Package.FULL_REPLACEMENT, COP, PRICES, flat_profiles(), median_heating=800.0)
    assert out.g == 1234.5
    assert out.appliance_kwh == pytest.approx(234.5 * KWH_PER_THERM * 0.9)
    jhp = evaluate_retrofit(h, Package.JUST_HEAT_PUMP, COP, PRICES, flat_profiles(), median_heating=800.0)
    assert jhp.g == 1000.0


def test_median_household_under_default_profiles():
    pop = generate_population(PopulationSpec(count=301, seed=4))
    med = median_heating_gas(pop)
    heating = np.array([h.heating_gas for h in pop])
    h = pop[int(np.argsort(heating)[len(pop) // 2])]
    for pkg in Package:
        out = evaluate_retrofit(h, pkg, COP, PRICES, load_profiles(), median_heating=med)
        assert 0 <= out.e_prime < out.new_demand


def test_heating_shares():
    t = np.array([20.0, 18.0, 8.0, -2.0])
    assert heating_shares(t) == pytest.approx([0.0, 0.0, 1 / 3, 2 / 3])
    assert heating_shares(np.full(4, 25.0)) == pytest.approx(np.full(4, 0.25))
    with pytest.raises(EmptyTempProfile):
        heating_shares([])


def test_cop_floor():
    assert COP.cop(-100.0) == 1.5
    assert COP.cop(18.0) == pytest.approx(3.6)


def test_profiles_shape_checked():
    with pytest.raises(ValueError):
        Profiles(np.zeros(3), np.zeros(4))
    with pytest.raises(EmptyTempProfile):
        Profiles(np.zeros(0), np.zeros(0))


def test_daily_self_consumption_never_beats_annual():
    h = household(gas=1500.0, summer=300.0, roof=80.0)
    prof = load_profiles()
    annual = evaluate_retrofit(h, Package.FULL_REPLACEMENT, COP, PRICES, prof, median_heating=800.0)
    daily = evaluate_retrofit(h, Package.FULL_REPLACEMENT, COP, PRICES, prof, median_heating=800.0,
                              params=RetrofitParams(self_consumption="daily"))
    assert daily.e_prime >= annual.e_prime


def test_population_outcomes_aligned():
    pop = generate_population(PopulationSpec(count=50, seed=2))
    outs = evaluate_population(pop, COP, PRICES, load_profiles())
    for pkg, rows in outs.items():
        assert [o.household_id for o in rows] == [h.id for h in pop]
        assert all(o.package is pkg for o in rows)


@settings(max_examples=150, deadline=None)
@given(gas=st.floats(0, 5000), frac=st.floats(0, 1), electric=st.floats(0, 30000), roof=st.floats(0, 300),
       temp=st.floats(-20, 30), pkg=st.sampled_from(list(Package)))
def test_retrofit_outcome_bounds(gas, frac, electric, roof, temp, pkg):
    h = household(gas=gas, summer=gas * frac, electric=electric, roof=roof)
    out = evaluate_retrofit(h, pkg, COP, PRICES, flat_profiles(temp=temp), median_heating=800.0)
    assert 0 <= out.e_prime <= out.new_demand + 1e-9
    assert out.install_cost >= 0
    assert out.solar_kw <= roof / 5.5 + 1e-12
    assert 0 <= out.g <= gas
    assert math.isclose(out.new_demand, electric + out.hp_kwh + out.appliance_kwh, rel_tol=1e-12, abs_tol=1e-9)
