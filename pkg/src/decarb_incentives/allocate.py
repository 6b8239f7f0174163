"""Budget-constrained incentive allocation as (multiple-choice) knapsack problems.

Money is integer cents throughout.  A household may appear in several
``KnapsackItem`` rows, one per retrofit option; at most one option per
household is chosen.  All variants share one exact core solver: a sparse
dynamic program over (spend, value) states that starts from the LP break
solution and discards states whose Lagrangian upper bound cannot reach the
best feasible value found so far.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import UnknownGroup

ALL = "all"


def to_cents(amount: float) -> int:
    """Round a dollar amount to the nearest cent."""
    return int(round(float(amount) * 100))


def ceil_cents(amount: float) -> int:
    """Smallest whole number of cents not below ``amount`` dollars (guards acceptance)."""
    return int(math.ceil(float(amount) * 100 - 1e-6))


@dataclass(frozen=True)
class KnapsackItem:
    household_id: str
    value: int  # cents; may be negative
    weight: int  # cents, the minimum accepted incentive
    group: str = ALL
    option: str = ""

    def __post_init__(self):
        if int(self.weight) != self.weight or int(self.value) != self.value:
            raise TypeError("item value and weight must be integer cents")
        if self.weight < 0:
            raise ValueError(f"item {self.household_id}: negative weight {self.weight}")


@dataclass(frozen=True)
class EquitySpec:
    groups: tuple = ("Low", "Medium", "High")
    shares: tuple = (0.25, 0.50, 0.25)

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(str(g) for g in self.groups))
        object.__setattr__(self, "shares", tuple(float(s) for s in self.shares))
        if len(self.groups) != len(self.shares) or not self.groups:
            raise ValueError("equity spec needs one share per group")
        if len(set(self.groups)) != len(self.groups):
            raise ValueError("duplicate equity groups")
        if any(s < 0 for s in self.shares) or not math.isclose(sum(self.shares), 1.0, abs_tol=1e-9):
            raise ValueError("equity shares must be non-negative and sum to 1")

    def budgets(self, budget: int) -> dict[str, int]:
        """Per-group budgets share * budget, floored to whole cents."""
        return {g: int(math.floor(s * budget + 1e-9)) for g, s in zip(self.groups, self.shares)}

    def check(self, items: Sequence[KnapsackItem]) -> None:
        known = set(self.groups)
        for it in items:
            if it.group not in known:
                raise UnknownGroup(f"household {it.household_id} has group {it.group!r} "
                                   f"not in {list(self.groups)}")


@dataclass
class AllocationPlan:
    selected: tuple = ()
    incentives: dict = field(default_factory=dict)  # household id -> cents
    options: dict = field(default_factory=dict)  # household id -> chosen option
    total_spend: int = 0
    total_value: int = 0
    per_group_spend: dict = field(default_factory=dict)
    budget: int = 0
    year: int | None = None
    exact: bool = True

    def as_dict(self) -> dict:
        return {
            "year": self.year,
            "budget_cents": self.budget,
            "total_spend_cents": self.total_spend,
            "total_value_cents": self.total_value,
            "per_group_spend_cents": dict(sorted(self.per_group_spend.items())),
            "exact": self.exact,
            "selected": [{"household_id": h, "option": self.options.get(h, ""),
                          "incentive_cents": self.incentives[h]} for h in self.selected],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.as_dict(), **kw)


def _make_plan(chosen: Sequence[KnapsackItem], budget: int, year=None, exact=True) -> AllocationPlan:
    chosen = sorted(chosen, key=lambda it: it.household_id)
    per_group: dict[str, int] = {}
    for it in chosen:
        per_group[it.group] = per_group.get(it.group, 0) + it.weight
    return AllocationPlan(
        selected=tuple(it.household_id for it in chosen),
        incentives={it.household_id: it.weight for it in chosen},
        options={it.household_id: it.option for it in chosen},
        total_spend=sum(it.weight for it in chosen),
        total_value=sum(it.value for it in chosen),
        per_group_spend=per_group, budget=budget, year=year, exact=exact,
    )


def merge_plans(plans: Sequence[AllocationPlan]) -> AllocationPlan:
    """Union of disjoint plans (e.g. per-group or per-year pieces)."""
    out = AllocationPlan(exact=all(p.exact for p in plans))
    sel = []
    for p in plans:
        sel.extend(p.selected)
        out.incentives.update(p.incentives)
        out.options.update(p.options)
        out.total_spend += p.total_spend
        out.total_value += p.total_value
        out.budget += p.budget
        for g, s in p.per_group_spend.items():
            out.per_group_spend[g] = out.per_group_spend.get(g, 0) + s
    if len(set(sel)) != len(sel):
        raise ValueError("plans select overlapping households")
    out.selected = tuple(sorted(sel))
    return out


# --------------------------------------------------------------------------
# Core solver


def _group_households(items: Sequence[KnapsackItem]):
    """Positive-value options grouped by household, dominated options removed."""
    by_hh: dict[str, list[KnapsackItem]] = {}
    group_of: dict[str, str] = {}
    for it in items:
        if group_of.setdefault(it.household_id, it.group) != it.group:
            raise ValueError(f"household {it.household_id} appears in two groups")
        if it.value > 0:
            by_hh.setdefault(it.household_id, []).append(it)
    households = []
    for hid in sorted(by_hh):
        opts = sorted(by_hh[hid], key=lambda it: (it.weight, -it.value, it.option))
        kept, best_v = [], None
        for it in opts:  # increasing weight: keep only strict value improvements
            if best_v is None or it.value > best_v:
                kept.append(it)
                best_v = it.value
        households.append(kept)
    return households


def _greedy(households, caps, gidx, capacity):
    """Feasible starting solution: best value-per-cent options first."""
    cand = []
    for h, opts in enumerate(households):
        for o, it in enumerate(opts):
            eff = math.inf if it.weight == 0 else it.value / it.weight
            cand.append((-eff, -it.value, h, o))
    cand.sort()
    choice = [-1] * len(households)
    spent, gspent = 0, np.zeros(len(caps), dtype=np.int64)
    for _, _, h, o in cand:
        if choice[h] != -1:
            continue
        w = households[h][o].weight
        g = gidx[h]
        if spent + w <= capacity and (g < 0 or gspent[g] + w <= caps[g]):
            choice[h] = o
            spent += w
            if g >= 0:
                gspent[g] += w
    value = sum(households[h][o].value for h, o in enumerate(choice) if o >= 0)
    return value, spent, choice


def _lp_duals(households, caps, gidx, capacity):
    """Dual prices of the budget rows in the LP relaxation (HiGHS)."""
    from scipy.optimize import linprog
    from scipy.sparse import coo_matrix

    rows, cols, vals, c = [], [], [], []
    n_h = len(households)
    n_cap = 1 + len(caps)
    j = 0
    for h, opts in enumerate(households):
        for it in opts:
            c.append(-float(it.value))
            rows += [h, n_h]
            cols += [j, j]
            vals += [1.0, float(it.weight)]
            if gidx[h] >= 0:
                rows.append(n_h + 1 + gidx[h])
                cols.append(j)
                vals.append(float(it.weight))
            j += 1
    A = coo_matrix((vals, (rows, cols)), shape=(n_h + n_cap, j)).tocsr()
    b = np.concatenate([np.ones(n_h), [float(capacity)], np.asarray(caps, dtype=float)])
    res = linprog(np.asarray(c), A_ub=A, b_ub=b, bounds=(0, 1), method="highs")
    if res.status != 0:
        return 0.0, np.zeros(len(caps))
    duals = -np.asarray(res.ineqlin.marginals)[n_h:]
    duals = np.maximum(duals, 0.0)
    return float(duals[0]), duals[1:]


def _critical_ratio(households, capacity):
    """Cheap multiplier for small instances: efficiency where greedy fills the budget."""
    eff = sorted(((it.value / it.weight, it.weight) for opts in households for it in opts
                  if it.weight > 0), reverse=True)
    used = 0
    for e, w in eff:
        used += w
        if used > capacity:
            return e
    return 0.0


def _dominance_filter(V, W, G):
    """Drop states beaten on value by a state with no more spend (per group-spend key)."""
    if G.shape[1] == 0:
        order = np.lexsort((-V, W))
        Vs = V[order]
        prev = np.concatenate(([np.iinfo(np.int64).min], np.maximum.accumulate(Vs)[:-1]))
        return order[Vs > prev]
    keys = [-V, W] + [G[:, k] for k in range(G.shape[1] - 1, -1, -1)]
    order = np.lexsort(keys)
    Gs = G[order]
    new_seg = np.ones(order.size, dtype=bool)
    new_seg[1:] = np.any(Gs[1:] != Gs[:-1], axis=1)
    seg = np.cumsum(new_seg) - 1
    Vs = V[order]
    vmin = int(Vs.min()) if Vs.size else 0
    span = int(Vs.max()) - vmin + 1 if Vs.size else 1
    if span * (int(seg[-1]) + 1 if seg.size else 1) < 2 ** 62:
        shifted = seg.astype(np.int64) * span + (Vs - vmin)
        run = np.maximum.accumulate(shifted)
        prev = np.concatenate(([-1], run[:-1]))
        keep = new_seg | (shifted > prev)
    else:  # fall back to an explicit loop when the packed key would overflow
        keep = np.zeros(order.size, dtype=bool)
        best = None
        for i in range(order.size):
            if new_seg[i] or Vs[i] > best:
                keep[i] = True
                best = Vs[i] if new_seg[i] or Vs[i] > best else best
    return order[keep]


@dataclass
class _CoreResult:
    choice: list  # per household option index, -1 for none
    value: int
    spend: int
    exact: bool


def _solve_core(households, gidx, caps, capacity, state_limit=2_000_000) -> _CoreResult:
    """Exact max-value, then min-spend, selection of at most one option per household.

    ``caps`` holds per-group spend limits for groups indexed by ``gidx``
    (``-1`` for households in uncapped groups); ``capacity`` bounds total spend.
    """
    n = len(households)
    caps = np.asarray(caps, dtype=np.int64)
    # options that can never fit are removed up front
    households = [[it for it in opts
                   if it.weight <= capacity and (gidx[h] < 0 or it.weight <= caps[gidx[h]])]
                  for h, opts in enumerate(households)]
    if n == 0 or not any(households):
        return _CoreResult([-1] * n, 0, 0, True)

    inc_value, inc_spend, inc_choice = _greedy(households, caps, gidx, capacity)

    n_opts = sum(len(o) for o in households)
    if n_opts > 64:
        lam, mu = _lp_duals(households, caps, gidx, capacity)
    else:
        lam, mu = (_critical_ratio(households, capacity) if len(caps) == 0 else 0.0), np.zeros(len(caps))

    # break solution: each household's best reduced-cost option
    price = np.array([lam + (mu[g] if g >= 0 else 0.0) for g in gidx])
    brk = []
    deltas = []  # per household: list of (option or -1, dv, dw, flip cost)
    for h, opts in enumerate(households):
        rc = [(it.value - price[h] * it.weight, -it.weight, o) for o, it in enumerate(opts)]
        rc.append((0.0, 0, -1))
        rc.sort(reverse=True)
        best_rc, _, b = rc[0]
        brk.append(b)
        bv = opts[b].value if b >= 0 else 0
        bw = opts[b].weight if b >= 0 else 0
        alts = []
        for r, _, o in rc[1:]:
            v = opts[o].value if o >= 0 else 0
            w = opts[o].weight if o >= 0 else 0
            alts.append((o, v - bv, w - bw, best_rc - r))
        deltas.append(alts)

    gcount = len(caps)
    V0 = sum(households[h][b].value for h, b in enumerate(brk) if b >= 0)
    W0 = sum(households[h][b].weight for h, b in enumerate(brk) if b >= 0)
    G0 = np.zeros(gcount, dtype=np.int64)
    for h, b in enumerate(brk):
        if b >= 0 and gidx[h] >= 0:
            G0[gidx[h]] += households[h][b].weight

    def upper(V, W, G):
        ub = V + lam * (capacity - W)
        if gcount:
            ub = ub + (caps - G) @ mu
        return ub

    def feasible(W, G):
        ok = W <= capacity
        if gcount:
            ok &= np.all(G <= caps, axis=1)
        return ok

    V = np.array([V0], dtype=np.int64)
    W = np.array([W0], dtype=np.int64)
    G = G0.reshape(1, gcount)
    UB = upper(V.astype(float), W, G)
    scale = abs(V0) + abs(lam) * capacity + float(np.abs(mu) @ caps if gcount else 0.0) + 1.0
    tol = 1e-9 * scale + 1e-6

    best_key = (inc_value, -inc_spend)
    if feasible(W, G)[0] and (V0, -W0) > best_key:
        best_key = (int(V0), -int(W0))
        inc_choice = None  # recovered from the state trace

    order = sorted(range(n), key=lambda h: (min((d[3] for d in deltas[h]), default=math.inf), h))
    trace = []  # per processed household: (h, parent index array, option array)
    exact = True
    for h in order:
        if not deltas[h]:
            continue
        min_flip = min(d[3] for d in deltas[h])
        if min_flip > UB.max() - best_key[0] + tol:
            break
        g = gidx[h]
        parts_V, parts_W, parts_G, parts_UB = [V], [W], [G], [UB]
        parts_par = [np.arange(V.size)]
        parts_opt = [np.full(V.size, brk[h], dtype=np.int16)]
        for o, dv, dw, flip in deltas[h]:
            ub = UB - flip
            alive = ub >= best_key[0] - tol
            if not alive.any():
                continue
            idx = np.nonzero(alive)[0]
            parts_V.append(V[idx] + dv)
            parts_W.append(W[idx] + dw)
            Gc = G[idx].copy()
            if g >= 0:
                Gc[:, g] += dw
            parts_G.append(Gc)
            parts_UB.append(ub[idx])
            parts_par.append(idx)
            parts_opt.append(np.full(idx.size, o, dtype=np.int16))
        V = np.concatenate(parts_V)
        W = np.concatenate(parts_W)
        G = np.concatenate(parts_G)
        UB = np.concatenate(parts_UB)
        par = np.concatenate(parts_par)
        opt = np.concatenate(parts_opt)

        feas = feasible(W, G)
        if feas.any():
            fi = np.nonzero(feas)[0]
            top = V[fi].max()
            wmin = W[fi][V[fi] == top].min()
            if (int(top), -int(wmin)) > best_key:
                best_key = (int(top), -int(wmin))
                inc_choice = None
        keep = np.nonzero(UB >= best_key[0] - tol)[0]
        sub = _dominance_filter(V[keep], W[keep], G[keep])
        keep = keep[sub]
        if keep.size > state_limit:
            keep = keep[np.argsort(-UB[keep], kind="stable")[:state_limit]]
            exact = False
        V, W, G, UB = V[keep], W[keep], G[keep], UB[keep]
        trace.append((h, par[keep], opt[keep]))

    if inc_choice is not None:
        return _CoreResult(inc_choice, best_key[0], -best_key[1], exact)
    # locate a final state achieving the best key and walk the trace back
    feas = feasible(W, G)
    hit = np.nonzero(feas & (V == best_key[0]) & (W == -best_key[1]))[0]
    choice = list(brk)
    if hit.size == 0:  # the incumbent state was pruned by dominance ties; rebuild via search
        raise RuntimeError("internal error: optimal state lost")
    s = int(hit[0])
    for h, parents, opts in reversed(trace):
        choice[h] = int(opts[s])
        s = int(parents[s])
    return _CoreResult(choice, best_key[0], -best_key[1], exact)


def _solve(items: Sequence[KnapsackItem], capacity: int, group_caps: Mapping[str, int] | None = None,
           year=None) -> AllocationPlan:
    if capacity < 0:
        raise ValueError(f"budget must be non-negative, got {capacity}")
    households = _group_households(items)
    group_caps = dict(group_caps or {})
    cap_groups = sorted(group_caps)
    gpos = {g: i for i, g in enumerate(cap_groups)}
    gidx = [gpos.get(opts[0].group, -1) for opts in households]
    caps = [int(group_caps[g]) for g in cap_groups]
    res = _solve_core(households, gidx, caps, int(capacity))
    chosen = [households[h][o] for h, o in enumerate(res.choice) if o >= 0]
    plan = _make_plan(chosen, int(capacity), year=year, exact=res.exact)
    assert plan.total_value == res.value and plan.total_spend == res.spend
    return plan


# --------------------------------------------------------------------------
# Public variants


def solve_knapsack(items: Sequence[KnapsackItem], budget: int) -> AllocationPlan:
    """Maximize total value with total weight within ``budget`` (cents).

    Among optimal selections the one with the lowest spend is returned.
    """
    return _solve(items, int(budget))


def solve_equity_knapsack(items: Sequence[KnapsackItem], budget: int, eq: EquitySpec) -> AllocationPlan:
    """Independent knapsacks per group, each limited to share * budget."""
    eq.check(items)
    caps = eq.budgets(int(budget))
    plans = []
    for g in eq.groups:
        plan = _solve([it for it in items if it.group == g], caps[g])
        plan.per_group_spend.setdefault(g, 0)
        plans.append(plan)
    out = merge_plans(plans)
    out.budget = int(budget)
    return out


YearValues = Mapping[tuple, float]
RefreshFn = Callable[[int, list], list]


def _year_items(pool: Sequence[KnapsackItem], y: int, values_by_year: YearValues | None) -> list:
    if values_by_year is None:
        return list(pool)
    out = []
    for it in pool:
        key = (it.household_id, it.option, y)
        if key not in values_by_year:
            key = (it.household_id, y)
        out.append(KnapsackItem(it.household_id, int(values_by_year[key]), it.weight, it.group, it.option))
    return out


def _multiyear(items, budget, years, values_by_year, acceptance_refresh, rollover, caps_for_year):
    if years < 1:
        raise ValueError("years must be at least 1")
    budget = int(budget)
    yearly = budget // years
    adopted: set[str] = set()
    plans = []
    carry = 0
    pool = list(items)
    for y in range(1, years + 1):
        pool = [it for it in pool if it.household_id not in adopted]
        if acceptance_refresh is not None:
            pool = list(acceptance_refresh(y, pool))
        year_items = _year_items(pool, y, values_by_year)
        cap = yearly + carry
        plan = caps_for_year(year_items, cap, y, plans)
        plan.year = y
        plans.append(plan)
        adopted.update(plan.selected)
        carry = cap - plan.total_spend if rollover else 0
    return plans


def solve_multiyear(items: Sequence[KnapsackItem], budget: int, years: int,
                    values_by_year: YearValues | None = None,
                    acceptance_refresh: RefreshFn | None = None,
                    rollover: bool = False) -> list[AllocationPlan]:
    """Year-by-year knapsacks over homes that have not yet adopted.

    Each year spends at most ``budget // years`` cents (plus any unspent
    balance when ``rollover`` is set).  ``values_by_year`` maps
    ``(household_id, year)`` or ``(household_id, option, year)`` to the
    projected value in cents; years run from 1 to ``years``.
    ``acceptance_refresh(year, items)`` may return updated items before each
    year's solve.
    """
    def solve_year(year_items, cap, y, _prior):
        return _solve(year_items, cap, year=y)
    return _multiyear(items, budget, years, values_by_year, acceptance_refresh, rollover, solve_year)


def solve_multiyear_equity(items: Sequence[KnapsackItem], budget: int, years: int, eq: EquitySpec,
                           mode: str = "Strict", values_by_year: YearValues | None = None,
                           acceptance_refresh: RefreshFn | None = None,
                           rollover: bool = False) -> list[AllocationPlan]:
    """Multi-year allocation with equity constraints.

    ``Strict``: every year, group m spends at most share_m * yearly budget.
    ``Relaxed``: every year's total stays within the yearly budget, and each
    group's spend summed over all years stays within share_m * budget.
    """
    eq.check(items)
    mode = str(mode).capitalize()
    if mode not in ("Strict", "Relaxed"):
        raise ValueError(f"unknown equity mode {mode!r}")
    budget = int(budget)
    group_total = eq.budgets(budget)

    if mode == "Strict":
        yearly = budget // max(years, 1)
        base = eq.budgets(yearly)
        carry = {g: 0 for g in eq.groups}

        def solve_year(year_items, cap, y, prior):
            if prior and rollover:
                last = prior[-1]
                for g in eq.groups:
                    carry[g] = carry[g] + base[g] - last.per_group_spend.get(g, 0)
            caps = {g: base[g] + carry[g] for g in eq.groups}
            plans = []
            for g in eq.groups:
                p = _solve([it for it in year_items if it.group == g], caps[g])
                p.per_group_spend.setdefault(g, 0)
                plans.append(p)
            out = merge_plans(plans)
            out.budget = sum(caps.values())
            return out
    else:
        def solve_year(year_items, cap, y, prior):
            spent = {g: sum(p.per_group_spend.get(g, 0) for p in prior) for g in eq.groups}
            caps = {g: group_total[g] - spent[g] for g in eq.groups}
            binding = {g: c for g, c in caps.items() if c < cap}
            plan = _solve(year_items, cap, group_caps=binding, year=y)
            for g in eq.groups:
                plan.per_group_spend.setdefault(g, 0)
            return plan

    return _multiyear(items, budget, years, values_by_year, acceptance_refresh, rollover, solve_year)


# --------------------------------------------------------------------------
# Exhaustive oracle (small instances only)


def brute_force(items: Sequence[KnapsackItem], capacity: int,
                group_caps: Mapping[str, int] | None = None) -> tuple[int, int]:
    """(best value, lowest spend at that value) by enumerating every subset."""
    items = [it for it in items]
    n = len(items)
    if n > 22:
        raise ValueError("brute force limited to 22 items")
    if n == 0:
        return 0, 0
    masks = ((np.arange(2 ** n)[:, None] >> np.arange(n)) & 1).astype(bool)
    v = np.array([it.value for it in items], dtype=np.int64)
    w = np.array([it.weight for it in items], dtype=np.int64)
    ok = masks.astype(np.int64) @ w <= capacity
    hh = {}
    for i, it in enumerate(items):
        hh.setdefault(it.household_id, []).append(i)
    for idx in hh.values():
        if len(idx) > 1:
            ok &= masks[:, idx].sum(axis=1) <= 1
    for g, c in (group_caps or {}).items():
        cols = [i for i, it in enumerate(items) if it.group == g]
        if cols:
            ok &= masks[:, cols].astype(np.int64) @ w[cols] <= c
    vals = masks.astype(np.int64) @ v
    spends = masks.astype(np.int64) @ w
    vals, spends = vals[ok], spends[ok]
    best = vals.max()
    return int(best), int(spends[vals == best].min())


def brute_force_multiyear(items, budget, years, values_by_year=None, eq: EquitySpec | None = None,
                          mode: str | None = None, rollover: bool = False) -> list[tuple[int, int]]:
    """Per-year (value, spend) of the myopic schedule, each year solved by enumeration.

    Mirrors the year loop of the solvers: each year is optimal given the
    households adopted in earlier years.  Among equally good selections the
    enumeration keeps the first one with the lowest spend.
    """
    budget = int(budget)
    yearly = budget // years
    adopted: set[str] = set()
    out = []
    carry = 0
    gcarry = {g: 0 for g in (eq.groups if eq else ())}
    gspent = {g: 0 for g in (eq.groups if eq else ())}
    for y in range(1, years + 1):
        pool = _year_items([it for it in items if it.household_id not in adopted], y, values_by_year)
        pool = [it for it in pool if it.value > 0]
        cap = yearly + carry
        if eq is None:
            chosen = _brute_choice(pool, cap, {})
        elif mode == "Strict":
            base = eq.budgets(yearly)
            chosen = []
            for g in eq.groups:
                chosen += _brute_choice([it for it in pool if it.group == g], base[g] + gcarry[g], {})
        else:
            gt = eq.budgets(budget)
            caps = {g: gt[g] - gspent[g] for g in eq.groups}
            chosen = _brute_choice(pool, cap, caps)
        value = sum(it.value for it in chosen)
        spend = sum(it.weight for it in chosen)
        out.append((value, spend))
        adopted.update(it.household_id for it in chosen)
        if eq is not None:
            for g in eq.groups:
                s = sum(it.weight for it in chosen if it.group == g)
                gspent[g] += s
                if mode == "Strict" and rollover:
                    gcarry[g] += eq.budgets(yearly)[g] - s
        carry = cap - spend if rollover else 0
    return out


def _brute_choice(pool, cap, group_caps):
    best, best_sel = (0, 0), []
    n = len(pool)
    for r in range(n + 1):
        for combo in itertools.combinations(range(n), r):
            sel = [pool[i] for i in combo]
            if len({it.household_id for it in sel}) < len(sel):
                continue
            spend = sum(it.weight for it in sel)
            if spend > cap:
                continue
            if any(sum(it.weight for it in sel if it.group == g) > c for g, c in group_caps.items()):
                continue
            key = (sum(it.value for it in sel), -spend)
            if key > best:
                best, best_sel = key, sel
    return best_sel
