"""Equipment sizing and post-retrofit energy balance per household."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyTempProfile
from .population import Household

KWH_PER_THERM = 29.307


class Package(str, enum.Enum):
    JUST_HEAT_PUMP = "JustHeatPump"
    FULL_REPLACEMENT = "FullReplacement"


PACKAGES = (Package.JUST_HEAT_PUMP, Package.FULL_REPLACEMENT)


@dataclass(frozen=True)
class EquipmentPrices:
    solar_per_kw: float = 2002.0
    battery_per_kwh: float = 1047.0
    heatpump_benchmark: float = 5250.0
    waterheater: float = 1575.0

    def __post_init__(self):
        for name in ("solar_per_kw", "battery_per_kwh", "heatpump_benchmark", "waterheater"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class CopModel:
    """Piecewise-linear heat-pump COP in ambient temperature, floored."""

    cop_at_reference: float = 3.0
    slope: float = 0.06  # per degC
    reference_temp: float = 8.0
    floor: float = 1.5

    def __post_init__(self):
        if not self.cop_at_reference > 1:
            raise ValueError("cop_at_reference must exceed 1")
        if not self.floor >= 1:
            raise ValueError("COP floor must be at least 1")

    def cop(self, temp):
        return np.maximum(self.floor,
                          self.cop_at_reference + self.slope * (np.asarray(temp, float) - self.reference_temp))


@dataclass(frozen=True)
class RetrofitParams:
    kwh_per_therm: float = KWH_PER_THERM
    appliance_efficiency_ratio: float = 0.9
    daytime_fraction: float = 0.5
    area_per_kw: float = 5.5  # m^2 of roof per kW of PV
    heating_base_temp: float = 18.0  # degC, heating-degree-day base
    solar_in_both: bool = True
    self_consumption: str = "annual"  # "annual" or "daily"

    def __post_init__(self):
        if self.self_consumption not in ("annual", "daily"):
            raise ValueError("self_consumption must be 'annual' or 'daily'")
        if not 0 <= self.daytime_fraction <= 1:
            raise ValueError("daytime_fraction must lie in [0, 1]")
        if self.area_per_kw <= 0 or self.kwh_per_therm <= 0 or self.appliance_efficiency_ratio <= 0:
            raise ValueError("conversion constants must be positive")


@dataclass(frozen=True)
class Profiles:
    """Daily (or hourly) ambient temperature and PV yield shapes.

    ``solar`` is kWh per installed kW for each bin; its sum is the annual
    yield per kW.  Both arrays must have the same length.
    """

    temperature: np.ndarray
    solar: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.temperature, dtype=float)
        s = np.asarray(self.solar, dtype=float)
        if t.size == 0:
            raise EmptyTempProfile("temperature profile is empty")
        if s.shape != t.shape:
            raise ValueError(f"solar profile has {s.size} bins, temperature has {t.size}")
        if (s < 0).any():
            raise ValueError("solar profile must be non-negative")
        object.__setattr__(self, "temperature", t)
        object.__setattr__(self, "solar", s)

    @property
    def annual_yield(self) -> float:
        return float(self.solar.sum())


@dataclass(frozen=True)
class RetrofitOutcome:
    household_id: str
    package: Package
    g: float  # therms / yr eliminated
    e_prime: float  # kWh / yr residual grid draw
    install_cost: float
    solar_kw: float
    battery_kwh: float
    hp_kwh: float = 0.0
    appliance_kwh: float = 0.0
    new_demand: float = 0.0
    solar_generation: float = 0.0


def heating_shares(temp_profile, base_temp: float = 18.0) -> np.ndarray:
    """Fraction of annual heating load falling in each bin (degree-day weighted)."""
    t = np.asarray(temp_profile, dtype=float)
    if t.size == 0:
        raise EmptyTempProfile("temperature profile is empty")
    hdd = np.maximum(base_temp - t, 0.0)
    total = hdd.sum()
    if total <= 0:
        return np.full(t.size, 1.0 / t.size)
    return hdd / total


def median_heating_gas(pop: Sequence[Household]) -> float:
    """Median heating gas among households that heat with gas."""
    heating = np.array([h.heating_gas for h in pop])
    heating = heating[heating > 0]
    return float(np.median(heating)) if heating.size else 0.0


def size_heatpump(h: Household, cop: CopModel, temp_profile, *, median_heating: float,
                  prices: EquipmentPrices = EquipmentPrices(),
                  params: RetrofitParams = RetrofitParams()) -> tuple[float, float]:
    """Electric energy (kWh/yr) and installed cost of a heat pump replacing heating gas.

    Cost scales the benchmark price by heating gas relative to the population
    median heating gas.
    """
    shares = heating_shares(temp_profile, params.heating_base_temp)
    heating = h.heating_gas
    if heating < 0:
        raise ValueError(f"household {h.id}: summer gas exceeds annual gas")
    if heating == 0:
        return 0.0, 0.0
    thermal = heating * params.kwh_per_therm
    hp_kwh = thermal * float(np.sum(shares / cop.cop(temp_profile)))
    hp_cost = prices.heatpump_benchmark * heating / median_heating if median_heating > 0 else 0.0
    return hp_kwh, hp_cost


def size_solar_battery(h: Household, solar_profile, post_demand: float,
                       prices: EquipmentPrices = EquipmentPrices(), *,
                       daily_demand=None, params: RetrofitParams = RetrofitParams()
                       ) -> tuple[float, float, float]:
    """PV capacity, battery capacity and their combined cost.

    PV covers annual demand unless the roof is the binding limit; the battery
    holds the largest single-bin surplus of generation over daytime demand.
    ``daily_demand`` defaults to ``post_demand`` spread evenly over the bins.
    """
    solar_profile = np.asarray(solar_profile, dtype=float)
    annual_yield = solar_profile.sum()
    if post_demand <= 0 or h.roof_area <= 0 or annual_yield <= 0:
        return 0.0, 0.0, 0.0
    solar_kw = min(post_demand / annual_yield, h.roof_area / params.area_per_kw)
    if daily_demand is None:
        daily_demand = np.full(solar_profile.size, post_demand / solar_profile.size)
    surplus = solar_kw * solar_profile - params.daytime_fraction * np.asarray(daily_demand, float)
    battery_kwh = max(0.0, float(surplus.max()))
    cost = solar_kw * prices.solar_per_kw + battery_kwh * prices.battery_per_kwh
    return solar_kw, battery_kwh, cost


def _self_consumption(generation, demand, battery_kwh, daytime_fraction):
    day = daytime_fraction * demand
    night = demand - day
    direct = np.minimum(generation, day)
    stored = np.minimum(np.minimum(np.maximum(generation - day, 0.0), battery_kwh), night)
    return direct + stored


def evaluate_retrofit(h: Household, pkg: Package, cop: CopModel, prices: EquipmentPrices,
                      profiles: Profiles, *, median_heating: float,
                      params: RetrofitParams = RetrofitParams()) -> RetrofitOutcome:
    pkg = Package(pkg)
    n_bins = profiles.temperature.size
    shares = heating_shares(profiles.temperature, params.heating_base_temp)
    hp_kwh, hp_cost = size_heatpump(h, cop, profiles.temperature, median_heating=median_heating,
                                    prices=prices, params=params)
    if pkg is Package.FULL_REPLACEMENT:
        appliance_kwh = h.summer_gas * params.kwh_per_therm * params.appliance_efficiency_ratio
        g = h.annual_gas
        extra_cost = prices.waterheater if h.summer_gas > 0 else 0.0
    else:
        appliance_kwh = 0.0
        g = h.heating_gas
        extra_cost = 0.0
    new_demand = h.annual_electric + hp_kwh + appliance_kwh
    daily = (h.annual_electric + appliance_kwh) / n_bins + hp_kwh * shares

    with_solar = params.solar_in_both or pkg is Package.FULL_REPLACEMENT
    if with_solar:
        solar_kw, battery_kwh, pv_cost = size_solar_battery(
            h, profiles.solar, new_demand, prices, daily_demand=daily, params=params)
    else:
        solar_kw = battery_kwh = pv_cost = 0.0
    generation = solar_kw * profiles.solar
    if params.self_consumption == "annual":
        # the battery shifts surplus to later demand, so all generation up to demand is used
        self_used_total = min(float(generation.sum()), new_demand)
    else:
        self_used_total = float(np.sum(_self_consumption(generation, daily, battery_kwh,
                                                         params.daytime_fraction)))
    e_prime = max(0.0, new_demand - self_used_total)
    return RetrofitOutcome(
        household_id=h.id, package=pkg, g=g, e_prime=e_prime,
        install_cost=hp_cost + pv_cost + extra_cost, solar_kw=solar_kw, battery_kwh=battery_kwh,
        hp_kwh=hp_kwh, appliance_kwh=appliance_kwh, new_demand=new_demand,
        solar_generation=float(generation.sum()),
    )


def evaluate_population(pop: Sequence[Household], cop: CopModel, prices: EquipmentPrices,
                        profiles: Profiles, params: RetrofitParams = RetrofitParams(),
                        packages=PACKAGES) -> dict[Package, list[RetrofitOutcome]]:
    """Outcomes for every (household, package), aligned with ``pop`` order."""
    med = median_heating_gas(pop)
    return {Package(p): [evaluate_retrofit(h, p, cop, prices, profiles, median_heating=med,
                                           params=params) for h in pop]
            for p in packages}
