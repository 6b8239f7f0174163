"""End-to-end experiments: Status Quo, Bandit and Optimal incentive policies.

A ``Scenario`` fixes every modelling input.  ``prepare`` runs the stages
that do not depend on the budget (population, retrofit sizing, carbon,
thresholds, survey and LCB fit); ``evaluate`` then scores the three policies
at one budget.  ``run_scenario`` does both for each budget in the sweep.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import acceptance, allocate, bandit, carbon, population, retrofit
from .acceptance import CostScenario
from .allocate import EquitySpec, KnapsackItem, ceil_cents, to_cents
from .errors import ConfigError, DecarbError, StageError
from .population import PopulationSpec
from .retrofit import PACKAGES, CopModel, EquipmentPrices, RetrofitParams
from . import resources

POLICIES = ("StatusQuo", "Bandit", "Optimal")
EQUITY_MODES = ("Agnostic", "Equity", "StrictEquityOverTime", "RelaxedEquityOverTime")

# stream ids for np.random.default_rng([seed, stream])
STREAM_POPULATION, STREAM_SURVEY, STREAM_NOISE = 0, 1, 2


@dataclass(frozen=True)
class Scenario:
    name: str = "default"
    seed: int = 20200101
    population: PopulationSpec = field(default_factory=PopulationSpec)
    population_csv: str | None = None
    cost: CostScenario = field(default_factory=CostScenario)
    prices: EquipmentPrices = field(default_factory=EquipmentPrices)
    cop: CopModel = field(default_factory=CopModel)
    retrofit: RetrofitParams = field(default_factory=RetrofitParams)
    temperature_profile: str | None = None
    solar_profile: str | None = None
    grid: str = "ISO-NE"
    gas_emission_factor: float = 5.3
    scc_table: str | None = None
    scc_year: int = 2020
    budgets: tuple = (1_000_000.0,)
    survey_n: int = 1000
    threshold_noise: float = 0.0
    equity_mode: str = "Agnostic"
    equity: EquitySpec = field(default_factory=EquitySpec)
    over_time: bool = False
    horizon_years: int = 10
    rollover: bool = False
    extra_rounds: int = 1
    nominal_incentive: float = 100.0
    tier_quantiles: tuple = (0.2, 0.4, 0.6, 0.8)
    tier_granularity: float = 10.0
    reward_cap_multiplier: float = 10.0
    alpha: float = bandit.DEFAULT_ALPHA

    def __post_init__(self):
        if self.equity_mode not in EQUITY_MODES:
            raise ConfigError(f"equity_mode must be one of {EQUITY_MODES}, got {self.equity_mode!r}")
        if not self.budgets:
            raise ConfigError("budgets: at least one budget is required")
        for b in self.budgets:
            if not b > 0:
                raise ConfigError(f"budgets: each budget must be positive, got {b}")
        if self.survey_n < 1:
            raise ConfigError("survey_n must be at least 1")
        if self.horizon_years < 1:
            raise ConfigError("horizon_years must be at least 1")
        if self.extra_rounds < 0:
            raise ConfigError("extra_rounds must be non-negative")
        if self.threshold_noise < 0:
            raise ConfigError("threshold_noise must be non-negative")
        if self.over_time and self.equity_mode == "Equity":
            raise ConfigError("over_time applies to Agnostic mode; use StrictEquityOverTime "
                              "or RelaxedEquityOverTime for equity over time")

    @property
    def multiyear(self) -> bool:
        return self.over_time or self.equity_mode.endswith("OverTime")

    def replace(self, **kw) -> "Scenario":
        return dataclasses.replace(self, **kw)


# --------------------------------------------------------------------------
# Budget-independent state


@dataclass
class Prepared:
    scenario: Scenario
    pop: list
    ids: list
    groups: np.ndarray  # income group label per household
    context_index: np.ndarray
    reductions: np.ndarray  # (n, P) tCO2 / yr
    values: np.ndarray  # (n, P) cents, single-year monetized reduction
    thresholds: np.ndarray  # (n, P) USD
    net_benefit: np.ndarray  # (n, P) USD at zero incentive
    baseline_tons: float
    sq_package: np.ndarray  # (n,) package index adopted for free, -1 if none
    arms: list
    survey: bandit.SurveyDataset
    estimator: bandit.LcbEstimator
    best: bandit.BestArmTable
    scc_sums: np.ndarray | None = None  # (Y,) sum of SCC from year y to the horizon

    @property
    def n(self) -> int:
        return len(self.pop)


def _stage(name):
    def wrap(fn):
        def inner(*a, **kw):
            try:
                return fn(*a, **kw)
            except StageError:
                raise
            except DecarbError as exc:
                raise StageError(name, exc) from exc
            except (ValueError, KeyError, OSError, RuntimeError) as exc:
                raise StageError(name, exc) from exc
        inner.__name__ = fn.__name__
        inner.__doc__ = fn.__doc__
        return inner
    return wrap


@_stage("population")
def _load_population(s: Scenario):
    if s.population_csv:
        pop = population.ingest_households(resources.resolve(s.population_csv, s.population_csv))
    else:
        pop = population.generate_population(dataclasses.replace(s.population, seed=s.seed))
    contexts, _ = population.discretize_contexts(pop)
    return pop, np.array([contexts[h.id].index for h in pop])


@_stage("retrofit")
def _retrofit(s: Scenario, pop):
    profiles = resources.load_profiles(s.temperature_profile, s.solar_profile)
    return retrofit.evaluate_population(pop, s.cop, s.prices, profiles, s.retrofit)


@_stage("carbon")
def _carbon(s: Scenario, pop, outcomes):
    ctx = carbon.EmissionsContext(resources.grid_intensity(s.grid), s.gas_emission_factor, s.grid)
    scc = resources.load_scc(s.scc_table)
    e = np.array([h.annual_electric for h in pop])
    red = np.column_stack([
        carbon.reduction_tons([o.g for o in outcomes[p]], e - np.array([o.e_prime for o in outcomes[p]]), ctx)
        for p in PACKAGES])
    values = np.vectorize(to_cents, otypes=[np.int64])(red * scc[s.scc_year])
    baseline = sum(ctx.baseline_tons(h) for h in pop)
    scc_sums = None
    if s.multiyear:
        years = [s.scc_year + y for y in range(s.horizon_years)]
        per_year = np.array([scc[t] for t in years])
        scc_sums = np.cumsum(per_year[::-1])[::-1]
    return red, values, baseline, scc_sums


@_stage("acceptance")
def _acceptance(s: Scenario, pop, outcomes):
    w = np.zeros((len(pop), len(PACKAGES)))
    nb = np.zeros_like(w)
    noise_rng = np.random.default_rng([s.seed, STREAM_NOISE])
    for j, p in enumerate(PACKAGES):
        th = [acceptance.acceptance_threshold(h, o, s.cost) for h, o in zip(pop, outcomes[p])]
        if s.threshold_noise > 0:
            th = acceptance.perturb_thresholds(th, s.threshold_noise, noise_rng)
        w[:, j] = [t.w for t in th]
        nb[:, j] = [acceptance.net_benefit(h, o, s.cost) for h, o in zip(pop, outcomes[p])]
    return w, nb


def status_quo_packages(thresholds: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Package index each zero-threshold household adopts unaided (largest monetized reduction), else -1."""
    free = thresholds == 0
    score = np.where(free, values, -np.inf)
    # ties go to the later package (FullReplacement)
    pick = score.shape[1] - 1 - np.argmax(score[:, ::-1], axis=1)
    return np.where(free.any(axis=1), pick, -1)


@_stage("survey")
def _survey(s: Scenario, ids, context_index, thresholds, reductions, N=None, seed_offset=0):
    flat = [acceptance.AcceptanceThreshold(ids[i], p, float(thresholds[i, j]), thresholds[i, j] == 0)
            for j, p in enumerate(PACKAGES) for i in range(len(ids))]
    arms = bandit.build_arms(flat, PACKAGES, nominal=s.nominal_incentive,
                             quantiles=s.tier_quantiles, granularity=s.tier_granularity)
    R = bandit.context_reductions(context_index, reductions)
    cap = bandit.reward_cap(arms, R, multiplier=s.reward_cap_multiplier)
    rng = np.random.default_rng([s.seed + seed_offset, STREAM_SURVEY])
    data = bandit.simulate_survey(context_index, arms, thresholds, reductions, N or s.survey_n, rng,
                                  cap=cap, household_ids=ids)
    est = bandit.fit_lcb(data, len(arms), population.N_CONTEXTS, s.alpha)
    return arms, data, est, bandit.best_arms(est, arms)


def prepare(s: Scenario) -> Prepared:
    """Run every budget-independent stage of a scenario."""
    pop, ctx_idx = _load_population(s)
    outcomes = _retrofit(s, pop)
    red, values, baseline, scc_sums = _carbon(s, pop, outcomes)
    w, nb = _acceptance(s, pop, outcomes)
    ids = [h.id for h in pop]
    arms, data, est, best = _survey(s, ids, ctx_idx, w, red)
    return Prepared(
        scenario=s, pop=pop, ids=ids, groups=np.array([h.income_group.value for h in pop]),
        context_index=ctx_idx, reductions=red, values=values, thresholds=w, net_benefit=nb,
        baseline_tons=float(baseline), sq_package=status_quo_packages(w, values), arms=arms,
        survey=data, estimator=est, best=best, scc_sums=scc_sums)


def resurvey(prep: Prepared, N: int, seed_offset: int = 0) -> Prepared:
    """Same ground truth with a fresh survey of size N."""
    arms, data, est, best = _survey(prep.scenario, prep.ids, prep.context_index, prep.thresholds,
                                    prep.reductions, N=N, seed_offset=seed_offset)
    return dataclasses.replace(prep, arms=arms, survey=data, estimator=est, best=best)


# --------------------------------------------------------------------------
# Policies


@dataclass
class PolicyResult:
    policy: str
    tons: float  # tCO2 / yr avoided once all adopters have retrofitted
    percent: float  # of no-intervention emissions
    value_usd: float  # monetized reduction (projected over the horizon when multi-year)
    spend_usd: float
    adopters: int
    per_group_spend: dict = field(default_factory=dict)
    per_year: list = field(default_factory=list)
    exact: bool = True

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _assignment_result(prep: Prepared, policy: str, pkg: np.ndarray, plans: Sequence[allocate.AllocationPlan],
                       value_cents: int) -> PolicyResult:
    adopted = pkg >= 0
    rows = np.nonzero(adopted)[0]
    tons = float(prep.reductions[rows, pkg[rows]].sum())
    spend = sum(p.total_spend for p in plans)
    groups: dict[str, int] = {}
    for p in plans:
        for g, c in p.per_group_spend.items():
            groups[g] = groups.get(g, 0) + c
    return PolicyResult(
        policy=policy, tons=tons, percent=100.0 * tons / prep.baseline_tons if prep.baseline_tons else 0.0,
        value_usd=value_cents / 100.0, spend_usd=spend / 100.0, adopters=int(adopted.sum()),
        per_group_spend={g: c / 100.0 for g, c in sorted(groups.items())},
        exact=all(p.exact for p in plans))


def _baseline_value(prep: Prepared) -> int:
    """Cents of value from free adopters (projected over the horizon when multi-year)."""
    rows = np.nonzero(prep.sq_package >= 0)[0]
    if prep.scenario.multiyear:
        tons = prep.reductions[rows, prep.sq_package[rows]]
        return int(sum(to_cents(t * prep.scc_sums[0]) for t in tons))
    return int(prep.values[rows, prep.sq_package[rows]].sum())


def run_status_quo(prep: Prepared) -> PolicyResult:
    """Only zero-threshold households adopt, each with its best-NetBenefit package."""
    res = _assignment_result(prep, "StatusQuo", prep.sq_package.copy(), [], _baseline_value(prep))
    if prep.scenario.multiyear:
        res.per_year = _per_year_series(prep, prep.sq_package.copy(), [])
    return res


def _item(prep: Prepared, i: int, j: int, weight_cents: int) -> KnapsackItem | None:
    """Knapsack item for household i adopting package j; values are net of any free baseline."""
    base = prep.sq_package[i]
    if base == j:
        return None
    value = int(prep.values[i, j]) - (int(prep.values[i, base]) if base >= 0 else 0)
    return KnapsackItem(prep.ids[i], value, int(weight_cents), str(prep.groups[i]), PACKAGES[j].value)


def _year_values(prep: Prepared, items: Sequence[KnapsackItem]) -> dict:
    """(household, option, year) -> projected value in cents for adopting in that year."""
    pos = {h: i for i, h in enumerate(prep.ids)}
    pidx = {p.value: j for j, p in enumerate(PACKAGES)}
    out = {}
    for it in items:
        i, j = pos[it.household_id], pidx[it.option]
        base = prep.sq_package[i]
        tons = prep.reductions[i, j] - (prep.reductions[i, base] if base >= 0 else 0.0)
        for y, s in enumerate(prep.scc_sums, start=1):
            out[(it.household_id, it.option, y)] = to_cents(tons * s)
    return out


def _allocate(prep: Prepared, items: list, budget_cents: int) -> list[allocate.AllocationPlan]:
    s = prep.scenario
    if not s.multiyear:
        if s.equity_mode == "Equity":
            return [allocate.solve_equity_knapsack(items, budget_cents, s.equity)]
        return [allocate.solve_knapsack(items, budget_cents)]
    values = _year_values(prep, items)
    if s.equity_mode == "Agnostic":
        return allocate.solve_multiyear(items, budget_cents, s.horizon_years, values, rollover=s.rollover)
    mode = "Strict" if s.equity_mode.startswith("Strict") else "Relaxed"
    return allocate.solve_multiyear_equity(items, budget_cents, s.horizon_years, s.equity, mode, values,
                                           rollover=s.rollover)


def _apply(prep: Prepared, plans) -> np.ndarray:
    pkg = prep.sq_package.copy()
    pos = {h: i for i, h in enumerate(prep.ids)}
    pidx = {p.value: j for j, p in enumerate(PACKAGES)}
    for plan in plans:
        for h in plan.selected:
            pkg[pos[h]] = pidx[plan.options[h]]
    return pkg


def _per_year_series(prep: Prepared, base_pkg: np.ndarray, plans) -> list[dict]:
    """Cumulative adoption state at the end of each year."""
    pkg = base_pkg.copy()
    pos = {h: i for i, h in enumerate(prep.ids)}
    pidx = {p.value: j for j, p in enumerate(PACKAGES)}
    by_year = {p.year: p for p in plans}
    out = []
    for y in range(1, prep.scenario.horizon_years + 1):
        plan = by_year.get(y)
        if plan is not None:
            for h in plan.selected:
                pkg[pos[h]] = pidx[plan.options[h]]
        rows = np.nonzero(pkg >= 0)[0]
        tons = float(prep.reductions[rows, pkg[rows]].sum())
        out.append({
            "year": prep.scenario.scc_year + y - 1,
            "spend_usd": (plan.total_spend if plan else 0) / 100.0,
            "value_usd": (plan.total_value if plan else 0) / 100.0,
            "tons": tons,
            "percent": 100.0 * tons / prep.baseline_tons if prep.baseline_tons else 0.0,
            "per_group_spend": {g: c / 100.0 for g, c in sorted(plan.per_group_spend.items())} if plan else {},
        })
    return out


def _finish(prep: Prepared, policy: str, plans) -> PolicyResult:
    value = _baseline_value(prep) + sum(p.total_value for p in plans)
    res = _assignment_result(prep, policy, _apply(prep, plans), plans, value)
    if prep.scenario.multiyear:
        res.per_year = _per_year_series(prep, prep.sq_package, plans)
    return res


def optimal_items(prep: Prepared) -> list[KnapsackItem]:
    items = []
    for i in range(prep.n):
        for j in range(len(PACKAGES)):
            it = _item(prep, i, j, ceil_cents(prep.thresholds[i, j]))
            if it is not None and it.value > 0:
                items.append(it)
    return items


def run_optimal(prep: Prepared, budget: float) -> PolicyResult:
    """Exact allocation with full knowledge of every household's threshold."""
    return _finish(prep, "Optimal", _allocate(prep, optimal_items(prep), to_cents(budget)))


def bandit_offers(prep: Prepared) -> tuple[np.ndarray, np.ndarray]:
    """Initial (package index, tier) offered to each household from the best-arm table."""
    arm_of = prep.best.arm_of_context[prep.context_index]
    pidx = {p: j for j, p in enumerate(PACKAGES)}
    pkg = np.array([pidx[prep.arms[k].package] for k in arm_of])
    tier = np.array([prep.arms[k].tier for k in arm_of])
    nominal = tier == 1
    # nominal-tier households are offered the package with the larger reduction (ties to FullReplacement)
    top = prep.reductions.shape[1] - 1 - np.argmax(prep.reductions[:, ::-1], axis=1)
    pkg = np.where(nominal, top, pkg)
    return pkg, tier


def run_bandit(prep: Prepared, budget: float) -> PolicyResult:
    """Offer each household its context's estimated best arm, then allocate among acceptors.

    When the first allocation leaves budget unspent, rejectors are offered
    the next tier up (at most ``extra_rounds`` times) and the allocation is
    re-solved over everyone who has accepted.
    """
    s = prep.scenario
    budget_cents = to_cents(budget)
    lookup = bandit.arm_lookup(prep.arms)
    pkg, tier = bandit_offers(prep)
    offered = np.zeros(prep.n, dtype=np.int64)  # cents of the accepted offer
    accepted = np.zeros(prep.n, dtype=bool)
    rounds = 0
    while True:
        for i in np.nonzero(~accepted)[0]:
            amount = lookup[(PACKAGES[pkg[i]], int(tier[i]))].incentive
            if amount >= prep.thresholds[i, pkg[i]]:
                accepted[i] = True
                offered[i] = to_cents(amount)
        items = [it for i in np.nonzero(accepted)[0]
                 if (it := _item(prep, i, pkg[i], offered[i])) is not None and it.value > 0]
        plans = _allocate(prep, items, budget_cents)
        spent = sum(p.total_spend for p in plans)
        if rounds >= s.extra_rounds or spent >= budget_cents or accepted.all():
            break
        rounds += 1
        tier = np.where(accepted, tier, np.minimum(tier + 1, bandit.N_TIERS))
    return _finish(prep, "Bandit", plans)


# --------------------------------------------------------------------------
# Results


@dataclass
class RunResult:
    scenario: str
    budget: float
    equity_mode: str
    payback_T: int
    discount_rate: float
    grid: str
    grid_intensity: float
    baseline_tons: float
    policies: dict  # policy name -> PolicyResult
    survey: dict

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["policies"] = {k: v.as_dict() for k, v in self.policies.items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)

    def long_rows(self):
        """(scenario, policy, budget, metric, value) rows."""
        for name in POLICIES:
            r = self.policies[name]
            for metric in ("tons", "percent", "value_usd", "spend_usd", "adopters"):
                yield (self.scenario, name, self.budget, metric, getattr(r, metric))
            for g, v in r.per_group_spend.items():
                yield (self.scenario, name, self.budget, f"spend_usd[{g}]", v)
            for row in r.per_year:
                for metric in ("spend_usd", "tons", "percent"):
                    yield (self.scenario, name, self.budget, f"{metric}@{row['year']}", row[metric])


LONG_HEADER = ("scenario", "policy", "budget", "metric", "value")


def long_csv(results: Sequence[RunResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LONG_HEADER)
    for r in results:
        for row in r.long_rows():
            w.writerow([row[0], row[1], _fmt(row[2]), row[3], _fmt(row[4])])
    return buf.getvalue()


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isfinite(x) and x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def survey_diagnostics(prep: Prepared) -> dict:
    counts = prep.estimator.counts
    nominal = [prep.arms[k].is_nominal for k in prep.best.arm_of_context]
    data = prep.survey
    return {
        "N": len(data),
        "accept_rate": float(np.mean(data.accepted)) if data.accepted is not None else None,
        "cells_observed": int((counts > 0).sum()),
        "cells_total": int(counts.size),
        "positive_lcb_cells": int((prep.estimator.lcb > 0).sum()),
        "nominal_best_contexts": int(sum(nominal)),
        "tiers": {p.value: [a.incentive for a in prep.arms if a.package is p] for p in PACKAGES},
    }


def evaluate(prep: Prepared, budget: float, policies: Sequence[str] = POLICIES) -> RunResult:
    """Score the requested policies at one budget."""
    s = prep.scenario
    out = {}
    for name in policies:
        try:
            if name == "StatusQuo":
                out[name] = run_status_quo(prep)
            elif name == "Optimal":
                out[name] = run_optimal(prep, budget)
            elif name == "Bandit":
                out[name] = run_bandit(prep, budget)
            else:
                raise ValueError(f"unknown policy {name!r}")
        except DecarbError as exc:
            raise StageError(f"policy:{name}", exc) from exc
    return RunResult(
        scenario=s.name, budget=float(budget), equity_mode=s.equity_mode, payback_T=s.cost.payback_T,
        discount_rate=s.cost.discount_rate, grid=s.grid, grid_intensity=resources.grid_intensity(s.grid),
        baseline_tons=prep.baseline_tons, policies=out, survey=survey_diagnostics(prep))


def run_scenario(s: Scenario) -> list[RunResult]:
    """All policies at every budget of the scenario (one survey shared by the sweep)."""
    prep = prepare(s)
    return [evaluate(prep, b) for b in s.budgets]
