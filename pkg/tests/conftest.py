from __future__ import annotations

import functools

import numpy as np
import pytest

from decarb_incentives import pipeline
from decarb_incentives.acceptance import CostScenario
from decarb_incentives.population import Household, IncomeGroup
from decarb_incentives.retrofit import Profiles

BUDGETS = tuple(float(b) * 1_000_000 for b in range(1, 11))


@functools.lru_cache(maxsize=None)
def prepared(T: int = 10, rate: float = 0.05, grid: str = "ISO-NE") -> pipeline.Prepared:
    """Default 3000-home scenario, prepared once per (T, rate, grid) for the whole session."""
    s = pipeline.Scenario(cost=CostScenario(discount_rate=rate, payback_T=T), grid=grid, budgets=BUDGETS)
    return pipeline.prepare(s)


def household(hid="h", gas=1000.0, electric=8000.0, summer=200.0, income=70000.0, roof=60.0,
              group=IncomeGroup.MEDIUM) -> Household:
    return Household(hid, gas, electric, summer, income, group, roof)


def flat_profiles(n=365, temp=0.0, annual_yield=1460.0) -> Profiles:
    return Profiles(np.full(n, temp), np.full(n, annual_yield / n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from .criteria import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n][2])
