"""Annual CO2 reduction of a retrofit and its value under the social cost of carbon."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import YearOutOfSchedule
from .population import Household
from .retrofit import RetrofitOutcome


@dataclass(frozen=True)
class EmissionsContext:
    grid_intensity: float  # gCO2eq / kWh
    gas_emission_factor: float = 5.3  # kgCO2 / therm
    name: str = ""

    def __post_init__(self):
        if self.grid_intensity < 0 or self.gas_emission_factor < 0:
            raise ValueError("emission factors must be non-negative")

    def baseline_tons(self, h: Household) -> float:
        """Annual emissions with no intervention, tCO2."""
        return (h.annual_gas * self.gas_emission_factor
                + h.annual_electric * self.grid_intensity / 1000.0) / 1000.0


def load_grid_trace(path) -> np.ndarray:
    """Hourly intensities (gCO2eq/kWh) from a ``timestamp,intensity`` CSV."""
    values = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise ValueError(f"{path}: expected a header with timestamp and intensity columns")
        for i, row in enumerate(reader, start=2):
            try:
                values.append(float(row[1]))
            except (IndexError, ValueError):
                raise ValueError(f"{path}: bad intensity on row {i}") from None
    if not values:
        raise ValueError(f"{path}: empty grid trace")
    return np.asarray(values)


def emissions_context_from_trace(path, gas_emission_factor: float = 5.3, name: str = "") -> EmissionsContext:
    trace = load_grid_trace(path)
    return EmissionsContext(float(trace.mean()), gas_emission_factor, name)


class SccSchedule:
    """Social cost of carbon, USD per metric ton, keyed by calendar year."""

    def __init__(self, values: Mapping[int, float]):
        if not values:
            raise ValueError("empty SCC schedule")
        self._values = {int(y): float(v) for y, v in values.items()}
        if any(v <= 0 for v in self._values.values()):
            raise ValueError("SCC values must be positive")
        years = sorted(self._values)
        if years != list(range(years[0], years[-1] + 1)):
            raise ValueError("SCC schedule must cover a contiguous range of years")

    @classmethod
    def from_csv(cls, path) -> "SccSchedule":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        return cls({int(r["year"]): float(r["scc_usd_per_t"]) for r in rows})

    @classmethod
    def constant(cls, value: float, first: int, last: int) -> "SccSchedule":
        return cls({y: value for y in range(first, last + 1)})

    @property
    def first_year(self) -> int:
        return min(self._values)

    @property
    def last_year(self) -> int:
        return max(self._values)

    def __contains__(self, year) -> bool:
        return int(year) in self._values

    def __getitem__(self, year) -> float:
        try:
            return self._values[int(year)]
        except KeyError:
            raise YearOutOfSchedule(
                f"year {year} outside SCC schedule {self.first_year}-{self.last_year}") from None

    def as_dict(self) -> dict[int, float]:
        return dict(self._values)


def reduction_tons(g, delta_e, ctx: EmissionsContext):
    """Vectorized form of :func:`annual_reduction` on raw quantities."""
    return (np.asarray(g) * ctx.gas_emission_factor
            + np.asarray(delta_e) * ctx.grid_intensity / 1000.0) / 1000.0


def annual_reduction(outcome: RetrofitOutcome, h: Household, ctx: EmissionsContext) -> float:
    """Tons of CO2 avoided per year; negative when extra grid draw outweighs gas savings."""
    return float(reduction_tons(outcome.g, h.annual_electric - outcome.e_prime, ctx))


def monetize(annual_tons: float, year: int, scc: SccSchedule) -> float:
    return annual_tons * scc[year]


def projected_value(annual_tons: float, adopt_year: int, horizon: int, scc: SccSchedule) -> float:
    """Value of a constant annual reduction from ``adopt_year`` through ``horizon`` inclusive."""
    if adopt_year > horizon:
        raise ValueError(f"adopt year {adopt_year} after horizon {horizon}")
    return annual_tons * sum(scc[t] for t in range(adopt_year, horizon + 1))
