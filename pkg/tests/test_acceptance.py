"""The ten acceptance criteria, each checked at its stated tolerance.

Every test records a one-line verdict through ``criteria.report``; the lines
are printed as they are produced and again in the session summary.
"""

from __future__ import annotations

import functools
import math
import time
from pathlib import Path

import numpy as np

from decarb_incentives import allocate, cli, config, pipeline
from decarb_incentives.acceptance import CostScenario, acceptance_threshold, net_benefit
from decarb_incentives.allocate import EquitySpec, KnapsackItem, brute_force
from decarb_incentives.bandit import Arm, SurveyDataset, best_arms, fit_lcb, lcb_scores, required_samples
from decarb_incentives.resources import bundled_grids, grid_intensity
from decarb_incentives.retrofit import Package, RetrofitOutcome

from .conftest import BUDGETS, household, prepared
from .criteria import report
from .oracles import check_plan_feasible, multiyear_matches_oracle, random_items, random_year_values

EQ = EquitySpec()  # Low / Medium / High = 25 / 50 / 25
T_VALUES = (5, 10, 15)
RATES = (0.05, 0.02)


@functools.lru_cache(maxsize=None)
def sweep(T: int, rate: float, grid: str = "ISO-NE"):
    """Per-budget monetized value of each policy on the default 3000-home city."""
    prep = prepared(T, rate, grid)
    sq = pipeline.run_status_quo(prep)
    rows = []
    for b in BUDGETS:
        rows.append({"budget": b, "StatusQuo": sq, "Bandit": pipeline.run_bandit(prep, b),
                     "Optimal": pipeline.run_optimal(prep, b)})
    return rows


# ---------------------------------------------------------------------------
# 1. Knapsack oracle equivalence


def _one_instance(rng, variant):
    n = int(rng.integers(1, 16))
    items = random_items(rng, n)
    budget = int(rng.integers(0, 40 * n + 1))
    if variant == "knapsack":
        plan = allocate.solve_knapsack(items, budget)
        check_plan_feasible(plan, items, budget)
        return plan.total_value == brute_force(items, budget)[0]
    if variant == "equity":
        plan = allocate.solve_equity_knapsack(items, budget, EQ)
        caps = EQ.budgets(budget)
        check_plan_feasible(plan, items, budget, caps)
        best = sum(brute_force([it for it in items if it.group == g], caps[g])[0] for g in EQ.groups)
        return plan.total_value == best
    years = int(rng.integers(1, 4))
    values = random_year_values(rng, items, years)
    mode = "Strict" if variant == "strict" else "Relaxed"
    plans = allocate.solve_multiyear_equity(items, budget, years, EQ, mode, values_by_year=values)
    return multiyear_matches_oracle(plans, items, budget, years, values, EQ, mode)


def test_criterion_01_knapsack_matches_brute_force():
    rng = np.random.default_rng(2020)
    t0 = time.perf_counter()
    mismatches = {}
    for variant in ("knapsack", "equity", "strict", "relaxed"):
        mismatches[variant] = sum(not _one_instance(rng, variant) for _ in range(200))
    elapsed = time.perf_counter() - t0
    ok = all(v == 0 for v in mismatches.values()) and elapsed < 10
    report(1, "knapsack oracle equivalence", ok,
           f"200 instances x 4 variants, mismatches {mismatches}, {elapsed:.2f}s (limit 10s)")
    assert ok


# ---------------------------------------------------------------------------
# 2. Lower-confidence-bound arithmetic


def test_criterion_02_lcb_arithmetic_and_pessimism():
    alpha = 1 / math.sqrt(2)
    # example 1: mean 0.5 from 4 responses in a survey of 100
    data = SurveyDataset([0] * 4 + [1] * 96, [0] * 100, [0.0, 1.0, 1.0, 0.0] + [0.2] * 96)
    est = fit_lcb(data, K=2, C=2)
    ex1 = est.lcb[0, 0]
    want1 = max(0.5 - alpha * math.sqrt(math.log(100) / 4), 0.0)
    # example 2: mean 0.5 over 10000 responses scored with N = 100 (same formula fit_lcb applies)
    ex2 = float(lcb_scores([0.5], [10_000], 100)[0])
    want2 = 0.5 - alpha * math.sqrt(math.log(100) / 10_000)
    # example 3: an arm never offered in a context
    ex3_mean, ex3_lcb, ex3_count = est.means[1, 0], est.lcb[1, 0], est.counts[1, 0]
    examples_ok = (abs(ex1 - 0.0) <= 1e-9 and abs(ex1 - want1) <= 1e-9
                   and abs(ex2 - want2) <= 1e-9 and abs(ex2 - 0.4848) <= 1e-4
                   and ex3_count == 0 and ex3_mean == 0.0 and ex3_lcb == 0.0)

    rng = np.random.default_rng(8)
    cells = 100_000
    means = rng.uniform(0, 1, cells)
    means[rng.uniform(size=cells) < 0.05] = 0.0
    counts = rng.integers(0, 50_000, cells)
    N = int(rng.integers(2, 10**7))
    lcb = lcb_scores(means, counts, N)
    seen = counts > 0
    pessimistic = bool((lcb <= means).all() and (lcb >= 0).all())
    strict = bool((lcb[seen & (means > 0)] < means[seen & (means > 0)]).all())
    ok = examples_ok and pessimistic and strict
    report(2, "LCB arithmetic", ok,
           f"examples ({ex1:.4f}, {ex2:.6f}, {ex3_lcb:.1f}) within 1e-9; "
           f"lcb <= mean on {cells} fuzzed cells: {pessimistic}, strict where mean > 0: {strict}")
    assert ok


# ---------------------------------------------------------------------------
# 3. Best-arm identification


def test_criterion_03_best_arm_identification():
    K, C, eps, seeds = 10, 125, 0.1, 20
    N = required_samples(K * C, eps)
    truth_rng = np.random.default_rng(125)
    true = truth_rng.uniform(0.0, 1.0, size=(K, C))
    arms = [Arm(k, Package.JUST_HEAT_PUMP, k % 5 + 1, 100.0 * (k + 1)) for k in range(K)]
    best_mean = true.max(axis=0)
    t0 = time.perf_counter()
    good = []
    for seed in range(seeds):
        rng = np.random.default_rng([3, seed])
        # uniform logging over the K*C cells gives coverage constant K*C = 1250
        cell = rng.integers(0, K * C, N)
        reward = (rng.random(N) < true.ravel()[cell]).astype(float)
        est = fit_lcb(SurveyDataset(cell % C, cell // C, reward), K, C)
        pick = best_arms(est, arms).arm_of_context
        good.append(best_mean - true[pick, np.arange(C)] <= eps)
    elapsed = time.perf_counter() - t0
    good = np.array(good)
    frac = float(good.mean())
    worst = float(good.mean(axis=1).min())
    ok = frac >= 0.95 and elapsed < 30
    report(3, "best-arm identification", ok,
           f"N = {N}, {seeds} seeds, {frac:.2%} of contexts within eps = {eps} "
           f"(worst seed {worst:.2%}), {elapsed:.1f}s (limit 30s)")
    assert N == 7_943_962
    assert ok


# ---------------------------------------------------------------------------
# 4. NetBenefit closed form


def test_criterion_04_net_benefit_closed_form():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(10_000):
        rate = float(rng.uniform(0.0, 0.15))
        T = int(rng.integers(1, 41))
        saving = float(rng.uniform(-3000, 5000))
        cost = float(rng.uniform(0, 60000))
        h = household(gas=0.0, summer=0.0, electric=10_000.0)
        o = RetrofitOutcome("h", Package.JUST_HEAT_PUMP, 0.0, 10_000.0 - saving, cost, 0.0, 0.0)
        s = CostScenario(rate, T, gas_price=1.0, electric_price=1.0)
        loop = sum((10_000.0 - (10_000.0 - saving)) / (1 + rate) ** t for t in range(T + 1)) - cost
        worst = max(worst, abs(net_benefit(h, o, s) - loop))
    # unit slope in the incentive, exact when every quantity is a whole number of dollars
    slope_exact = True
    for _ in range(2000):
        saving, cost, incentive = (int(x) for x in rng.integers(0, 20_000, 3))
        T = int(rng.integers(1, 30))
        h = household(gas=0.0, summer=0.0, electric=30_000.0)
        o = RetrofitOutcome("h", Package.JUST_HEAT_PUMP, 0.0, 30_000.0 - saving, float(cost), 0.0, 0.0)
        s = CostScenario(0.0, T, gas_price=1.0, electric_price=1.0)
        nb0 = net_benefit(h, o, s)
        slope_exact &= net_benefit(h, o, s, incentive) - nb0 == incentive
        w = acceptance_threshold(h, o, s).w
        slope_exact &= w == max(0.0, -nb0) and net_benefit(h, o, s, w) >= 0
    ok = worst <= 1e-6 and slope_exact
    report(4, "NetBenefit correctness", ok,
           f"max |closed form - loop| = {worst:.2e} over 10000 tuples (tol 1e-6); unit slope exact: {slope_exact}")
    assert ok


# ---------------------------------------------------------------------------
# 5. Policy ordering


def test_criterion_05_policy_ordering():
    violations = []
    for T in T_VALUES:
        for rate in RATES:
            for row in sweep(T, rate):
                sq, bd, op = (row[p].value_usd for p in ("StatusQuo", "Bandit", "Optimal"))
                if not sq <= bd <= op:
                    violations.append((T, rate, row["budget"], sq, bd, op))
    ok = not violations
    report(5, "policy ordering", ok,
           f"StatusQuo <= Bandit <= Optimal at 10 budgets x T {T_VALUES} x rates {RATES}; "
           f"violations {violations[:3]}")
    assert ok


# ---------------------------------------------------------------------------
# 6. Trends


def test_criterion_06_trends():
    gap_bad = []
    for T in T_VALUES:
        for rate in RATES:
            gaps = [row["Optimal"].value_usd - row["Bandit"].value_usd for row in sweep(T, rate)]
            if any(b < a for a, b in zip(gaps, gaps[1:])):
                gap_bad.append((T, rate))
    sq = {rate: [sweep(T, rate)[0]["StatusQuo"].percent for T in T_VALUES] for rate in RATES}
    sq_ok = all(all(b >= a for a, b in zip(v, v[1:])) and v[-1] > v[0] for v in sq.values())
    strict = {rate: all(b > a for a, b in zip(v, v[1:])) for rate, v in sq.items()}
    ok = not gap_bad and sq_ok
    shown = {r: [round(x, 3) for x in v] for r, v in sq.items()}
    report(6, "trend reproduction", ok,
           f"Optimal - Bandit gap non-decreasing in budget (failures {gap_bad}); "
           f"StatusQuo % at T=5/10/15 {shown}, rising from T=5 to T=15, strictly at every step {strict}")
    assert ok


# ---------------------------------------------------------------------------
# 7. Equity feasibility


class _Recorder:
    """Wraps the allocation entry points and keeps every plan they emit with its inputs."""

    def __init__(self, monkeypatch):
        self.calls = []
        for name in ("solve_knapsack", "solve_equity_knapsack", "solve_multiyear", "solve_multiyear_equity"):
            original = getattr(allocate, name)
            monkeypatch.setattr(allocate, name, self._wrap(name, original))

    def _wrap(self, name, fn):
        def inner(items, budget, *args, **kw):
            out = fn(items, budget, *args, **kw)
            self.calls.append((name, list(items), int(budget), args, kw, out))
            return out
        return inner


def _check_equity_call(name, items, budget, args, kw, out, scenario):
    by_key = {(it.household_id, it.option): it for it in items}

    def spends(plan):
        chosen = [by_key[(h, plan.options[h])] for h in plan.selected]
        total = sum(it.weight for it in chosen)
        groups = {g: sum(it.weight for it in chosen if it.group == g) for g in EQ.groups}
        return total, groups

    if name == "solve_equity_knapsack":
        total, groups = spends(out)
        caps = EQ.budgets(budget)
        return total <= budget and all(groups[g] <= caps[g] for g in EQ.groups)
    years = scenario.horizon_years
    yearly = budget // years
    mode = args[2] if len(args) > 2 else kw.get("mode")
    cum = {g: 0 for g in EQ.groups}
    seen: set[str] = set()
    for plan in out:
        total, groups = spends(plan)
        if total > yearly or seen & set(plan.selected):
            return False
        seen |= set(plan.selected)
        if mode == "Strict" and any(groups[g] > EQ.budgets(yearly)[g] for g in EQ.groups):
            return False
        for g in EQ.groups:
            cum[g] += groups[g]
    total_caps = EQ.budgets(budget)
    return all(cum[g] <= total_caps[g] for g in EQ.groups) and len(out) == years


def test_criterion_07_equity_feasibility(monkeypatch):
    checked, bad = 0, []
    for mode in ("Equity", "StrictEquityOverTime", "RelaxedEquityOverTime"):
        s = pipeline.Scenario(equity_mode=mode, equity=EQ, cost=CostScenario(0.02, 15),
                              budgets=(2_000_000.0, 8_000_000.0))
        prep = pipeline.prepare(s)
        rec = _Recorder(monkeypatch)
        for b in s.budgets:
            pipeline.run_optimal(prep, b)
            pipeline.run_bandit(prep, b)
        monkeypatch.undo()
        for call in rec.calls:
            checked += 1
            if not _check_equity_call(*call, s):
                bad.append((mode, call[0], call[2]))
    # a home whose cost exceeds its group's yearly share but not its horizon share
    items = [KnapsackItem("a", 100, 8, "A"), KnapsackItem("b", 10, 5, "B"), KnapsackItem("c", 10, 5, "B")]
    two = EquitySpec(("A", "B"), (0.5, 0.5))
    strict = sum(p.total_value for p in allocate.solve_multiyear_equity(items, 20, 2, two, "Strict"))
    relaxed = sum(p.total_value for p in allocate.solve_multiyear_equity(items, 20, 2, two, "Relaxed"))
    ok = not bad and checked > 0 and relaxed > strict
    report(7, "equity feasibility", ok,
           f"{checked} emitted allocations under Equity / Strict / Relaxed at 25/50/25, violations {bad}; "
           f"constructed instance Relaxed {relaxed} > Strict {strict}")
    assert ok


# ---------------------------------------------------------------------------
# 8. Grid sweep


def test_criterion_08_grid_monotonicity():
    grids = sorted(bundled_grids(), key=grid_intensity)
    rows = {g: sweep(10, 0.05, g) for g in grids}
    bad = []
    for k, b in enumerate(BUDGETS):
        tons = [rows[g][k]["Optimal"].tons for g in grids]
        if any(y < x for x, y in zip(tons, tons[1:])):
            bad.append(b)
    order = ", ".join(f"{g} {grid_intensity(g):.0f}" for g in grids)
    ok = not bad
    report(8, "environment sweep", ok,
           f"Optimal tCO2/yr non-decreasing in mean intensity over {len(grids)} traces ({order} g/kWh) "
           f"at every budget, T=10, 5%; failing budgets {bad}")
    assert ok


# ---------------------------------------------------------------------------
# 9. Determinism and performance


def test_criterion_09_determinism_and_speed(tmp_path):
    cfg = config.load_config(Path(__file__).resolve().parent.parent / "configs" / "example.yaml")
    times, outputs = [], []
    for k in range(2):
        cfg.output_dir = str(tmp_path / f"run{k}")
        t0 = time.perf_counter()
        cli.cmd_run(cfg)
        times.append(time.perf_counter() - t0)
        outputs.append((tmp_path / f"run{k}" / "results.csv").read_bytes())
    identical = outputs[0] == outputs[1]
    ok = identical and max(times) <= 60 and len(cfg.budgets) == 10
    report(9, "determinism and performance", ok,
           f"results.csv byte-identical across runs: {identical}; 10-budget sweep on 3000 homes "
           f"{times[0]:.1f}s / {times[1]:.1f}s (limit 60s)")
    assert ok


# ---------------------------------------------------------------------------
# 10. Survey-size diagnostic


def test_criterion_10_survey_size(tmp_path):
    cfg = config.RunConfig(output_dir=str(tmp_path))
    rows = cli.cmd_survey_diag(cfg)
    values = [r["bandit_value_usd"] for r in rows]
    Ns = [r["N"] for r in rows]
    ok = (Ns == list(range(100, 1001, 100)) and rows[0]["seeds"] >= 10
          and all(b >= a for a, b in zip(values, values[1:])))
    flat = len(set(values)) == 1
    report(10, "survey-size diagnostic", ok,
           f"Bandit value over N = 100..1000 averaged over {rows[0]['seeds']} seeds: "
           f"{values[0]:.2f} .. {values[-1]:.2f} USD, non-decreasing; constant in N: {flat}")
    assert ok
