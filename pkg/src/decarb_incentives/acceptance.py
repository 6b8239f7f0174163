"""Net-present-value adoption model: NetBenefit, incentive thresholds, break-even."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyPopulation
from .population import Household
from .retrofit import Package, RetrofitOutcome

DISCOUNT_PRESETS = {"moderate": 0.05, "high-growth": 0.02}


@dataclass(frozen=True)
class CostScenario:
    discount_rate: float = 0.05
    payback_T: int = 10
    gas_price: float = 1.160  # USD / therm
    electric_price: float = 0.14072  # USD / kWh

    def __post_init__(self):
        if not self.discount_rate > -1:
            raise ValueError("discount_rate must exceed -1")
        if self.payback_T < 1:
            raise ValueError("payback_T must be at least 1 year")
        if not (self.gas_price > 0 and self.electric_price > 0):
            raise ValueError("energy prices must be positive")

    def with_payback(self, T: int) -> "CostScenario":
        return CostScenario(self.discount_rate, T, self.gas_price, self.electric_price)


@dataclass(frozen=True)
class AcceptanceThreshold:
    household_id: str
    package: Package
    w: float
    accepts_at_zero: bool

    def accepts(self, incentive: float) -> bool:
        return incentive >= self.w


def discount_sum(rate: float, T: int) -> float:
    """sum_{t=0}^{T} (1 + rate)^-t in closed form."""
    if rate == 0:
        return float(T + 1)
    # (1 - v^(T+1)) / (1 - v) with v = 1/(1+rate), written to stay accurate for tiny rates
    return -math.expm1(-(T + 1) * math.log1p(rate)) * (1.0 + rate) / rate


def annual_costs(h: Household, outcome: RetrofitOutcome, s: CostScenario) -> tuple[float, float]:
    """(pre-retrofit, post-retrofit) annual energy bill."""
    pre = h.annual_gas * s.gas_price + h.annual_electric * s.electric_price
    residual_gas = max(h.annual_gas - outcome.g, 0.0)
    post = outcome.e_prime * s.electric_price + residual_gas * s.gas_price
    return pre, post


def annual_saving(h: Household, outcome: RetrofitOutcome, s: CostScenario) -> float:
    pre, post = annual_costs(h, outcome, s)
    return pre - post


def net_benefit(h: Household, outcome: RetrofitOutcome, s: CostScenario, incentive: float = 0.0) -> float:
    """Discounted bill savings over years 0..T, less install cost, plus incentive."""
    return annual_saving(h, outcome, s) * discount_sum(s.discount_rate, s.payback_T) \
        - outcome.install_cost + incentive


def acceptance_threshold(h: Household, outcome: RetrofitOutcome, s: CostScenario) -> AcceptanceThreshold:
    """Smallest incentive making NetBenefit non-negative."""
    w = max(0.0, -net_benefit(h, outcome, s, 0.0))
    return AcceptanceThreshold(h.id, outcome.package, w, w == 0.0)


def population_thresholds(pop: Sequence[Household], outcomes: Mapping[Package, Sequence[RetrofitOutcome]],
                          s: CostScenario) -> dict[Package, list[AcceptanceThreshold]]:
    return {p: [acceptance_threshold(h, o, s) for h, o in zip(pop, outs)]
            for p, outs in outcomes.items()}


def perturb_thresholds(thresholds: Sequence[AcceptanceThreshold], width: float,
                       rng: np.random.Generator) -> list[AcceptanceThreshold]:
    """Relative uniform noise of half-width ``width`` on positive thresholds.

    Zero thresholds stay zero: those households adopt regardless.
    """
    if width <= 0:
        return list(thresholds)
    factors = 1.0 + rng.uniform(-width, width, size=len(thresholds))
    out = []
    for t, f in zip(thresholds, factors):
        w = max(0.0, t.w * f) if t.w > 0 else 0.0
        out.append(AcceptanceThreshold(t.household_id, t.package, w, w == 0.0))
    return out


# --------------------------------------------------------------------------
# Break-even analysis

@dataclass(frozen=True)
class BreakEvenRow:
    household_id: str
    package: Package
    annual_saving: float
    install_cost: float
    break_even_year: float  # inf when never within max_years
    net_benefit: Mapping[int, float]


@dataclass
class BreakEvenReport:
    horizons: tuple
    fraction_failing: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)


def break_even_year(saving: float, install_cost: float, rate: float, max_years: int = 100) -> float:
    """Smallest integer T with NetBenefit >= 0 at zero incentive."""
    if install_cost <= 0:
        return 0.0
    if saving <= 0:
        return math.inf
    # discount_sum is increasing in T for positive savings
    for T in range(0, max_years + 1):
        if saving * discount_sum(rate, T) - install_cost >= 0:
            return float(T)
    return math.inf


def break_even_analysis(pop: Sequence[Household], outcomes: Mapping[Package, Sequence[RetrofitOutcome]],
                        s: CostScenario, horizons=(5, 10, 15)) -> BreakEvenReport:
    """Share of households for which no package breaks even within each horizon.

    Each household is judged on its own best package (highest NetBenefit at the
    longest horizon); the rows are sorted by break-even year.
    """
    if len(pop) == 0:
        raise EmptyPopulation("break-even analysis needs at least one household")
    horizons = tuple(sorted(int(T) for T in horizons))
    packages = list(outcomes)
    failing = {T: 0 for T in horizons}
    rows = []
    for i, h in enumerate(pop):
        best = None
        nb_any = {T: False for T in horizons}
        for p in packages:
            o = outcomes[p][i]
            saving = annual_saving(h, o, s)
            nbs = {T: saving * discount_sum(s.discount_rate, T) - o.install_cost for T in horizons}
            for T in horizons:
                nb_any[T] |= nbs[T] >= 0
            key = (nbs[horizons[-1]], p is Package.FULL_REPLACEMENT)
            if best is None or key > best[0]:
                best = (key, p, saving, o.install_cost, nbs)
        for T in horizons:
            failing[T] += not nb_any[T]
        _, p, saving, cost, nbs = best
        rows.append(BreakEvenRow(h.id, p, saving, cost,
                                 break_even_year(saving, cost, s.discount_rate), nbs))
    rows.sort(key=lambda r: (r.break_even_year, r.household_id))
    n = len(pop)
    return BreakEvenReport(horizons, {T: failing[T] / n for T in horizons}, rows)
