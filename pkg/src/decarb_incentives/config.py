"""YAML run configuration: strict parsing, defaults, and expansion into scenarios.

Every section is a dataclass; unknown keys, wrong types and out-of-range
values raise :class:`ConfigError` naming the offending field.
"""

from __future__ import annotations

import dataclasses
import itertools
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .acceptance import DISCOUNT_PRESETS, CostScenario
from .allocate import EquitySpec
from .bandit import DEFAULT_ALPHA
from .errors import ConfigError
from .pipeline import EQUITY_MODES, Scenario
from .population import Marginal, PopulationSpec
from .retrofit import CopModel, EquipmentPrices, RetrofitParams

_DEFAULT_POP = PopulationSpec()


def _marginal_dict(m: Marginal) -> dict:
    return {"family": m.family, **m.params}


@dataclass
class PopulationSection:
    csv: str | None = None
    count: int = _DEFAULT_POP.count
    income: dict = field(default_factory=lambda: _marginal_dict(_DEFAULT_POP.income))
    gas: dict = field(default_factory=lambda: _marginal_dict(_DEFAULT_POP.gas))
    electric: dict = field(default_factory=lambda: _marginal_dict(_DEFAULT_POP.electric))
    summer_fraction: dict = field(default_factory=lambda: _marginal_dict(_DEFAULT_POP.summer_fraction))
    roof_area: dict = field(default_factory=lambda: _marginal_dict(_DEFAULT_POP.roof_area))
    income_gas_correlation: float = _DEFAULT_POP.income_gas_correlation
    roof_gas_correlation: float = _DEFAULT_POP.roof_gas_correlation


@dataclass
class CostSection:
    discount_rate: float | str = 0.05  # a number or a preset name
    payback_T: int = 10
    gas_price: float = 1.160
    electric_price: float = 0.14072
    threshold_noise: float = 0.0


@dataclass
class PricesSection:
    solar_per_kw: float = 2002.0
    battery_per_kwh: float = 1047.0
    heatpump_benchmark: float = 5250.0
    waterheater: float = 1575.0


@dataclass
class CopSection:
    cop_at_reference: float = 3.0
    slope: float = 0.06
    reference_temp: float = 8.0
    floor: float = 1.5


@dataclass
class RetrofitSection:
    appliance_efficiency_ratio: float = 0.9
    daytime_fraction: float = 0.5
    area_per_kw: float = 5.5
    heating_base_temp: float = 18.0
    solar_in_both: bool = True
    self_consumption: str = "annual"
    temperature_profile: str | None = None
    solar_profile: str | None = None


@dataclass
class CarbonSection:
    grid: str = "ISO-NE"
    gas_emission_factor: float = 5.3
    scc_table: str | None = None
    scc_year: int = 2020


@dataclass
class SurveySection:
    n: int = 1000
    nominal_incentive: float = 100.0
    tier_quantiles: list = field(default_factory=lambda: [0.2, 0.4, 0.6, 0.8])
    tier_granularity: float = 10.0
    reward_cap_multiplier: float = 10.0
    alpha: float = DEFAULT_ALPHA
    extra_rounds: int = 1


@dataclass
class EquitySection:
    mode: str = "Agnostic"
    groups: list = field(default_factory=lambda: ["Low", "Medium", "High"])
    shares: list = field(default_factory=lambda: [0.25, 0.5, 0.25])
    over_time: bool = False
    horizon_years: int = 10
    rollover: bool = False


@dataclass
class SweepSection:
    """Optional lists; the run covers their Cartesian product."""

    payback_T: list | None = None
    discount_rate: list | None = None
    grid: list | None = None


@dataclass
class BreakevenSection:
    horizons: list = field(default_factory=lambda: [5, 10, 15])


@dataclass
class SurveyDiagSection:
    n_values: list = field(default_factory=lambda: list(range(100, 1001, 100)))
    seeds: int = 10
    budget: float = 1_000_000.0


@dataclass
class RunConfig:
    name: str = "default"
    seed: int = 20200101
    output_dir: str = "results"
    budgets: list = field(default_factory=lambda: [1_000_000.0])
    population: PopulationSection = field(default_factory=PopulationSection)
    cost: CostSection = field(default_factory=CostSection)
    prices: PricesSection = field(default_factory=PricesSection)
    cop: CopSection = field(default_factory=CopSection)
    retrofit: RetrofitSection = field(default_factory=RetrofitSection)
    carbon: CarbonSection = field(default_factory=CarbonSection)
    survey: SurveySection = field(default_factory=SurveySection)
    equity: EquitySection = field(default_factory=EquitySection)
    sweep: SweepSection = field(default_factory=SweepSection)
    breakeven: BreakevenSection = field(default_factory=BreakevenSection)
    survey_diag: SurveyDiagSection = field(default_factory=SurveyDiagSection)


# --------------------------------------------------------------------------
# Generic strict conversion


def _check_scalar(value, tp, where: str):
    origin = typing.get_origin(tp)
    if origin is typing.Union or origin is types.UnionType:
        args = typing.get_args(tp)
        if value is None and type(None) in args:
            return None
        errors = []
        for a in args:
            if a is type(None):
                continue
            try:
                return _check_scalar(value, a, where)
            except ConfigError as exc:
                errors.append(str(exc))
        raise ConfigError(errors[0] if errors else f"{where}: invalid value {value!r}")
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if tp is list or origin is list:
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list, got {value!r}")
        return list(value)
    if tp is dict or origin is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected a mapping, got {value!r}")
        return dict(value)
    raise ConfigError(f"{where}: unsupported type {tp}")


def _from_dict(cls, data, where: str):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{where or 'config'}: expected a mapping, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where + '.' if where else ''}{unknown[0]}: unknown key")
    kw = {}
    for f in dataclasses.fields(cls):
        if f.name not in data:
            continue
        path = f"{where}.{f.name}" if where else f.name
        tp = hints[f.name]
        if dataclasses.is_dataclass(tp):
            kw[f.name] = _from_dict(tp, data[f.name], path)
        else:
            kw[f.name] = _check_scalar(data[f.name], tp, path)
    return cls(**kw)


def parse_config(data: dict) -> RunConfig:
    cfg = _from_dict(RunConfig, data, "")
    validate(cfg)
    return cfg


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from None
    return parse_config(data or {})


def to_dict(cfg: RunConfig) -> dict:
    return dataclasses.asdict(cfg)


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False)


# --------------------------------------------------------------------------
# Validation and expansion


def _rate(value, where: str) -> float:
    if isinstance(value, str):
        if value not in DISCOUNT_PRESETS:
            raise ConfigError(f"{where}: unknown preset {value!r}; choose from {sorted(DISCOUNT_PRESETS)}")
        return DISCOUNT_PRESETS[value]
    return float(value)


def _marginal(d: dict, where: str) -> Marginal:
    d = dict(d)
    family = d.pop("family", None)
    if family is None:
        raise ConfigError(f"{where}.family: required")
    m = Marginal(family, {k: float(v) for k, v in d.items()})
    try:
        m.validate(where)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return m


def _positive(value, where):
    if not value > 0:
        raise ConfigError(f"{where}: must be positive, got {value}")


def validate(cfg: RunConfig) -> None:
    if not cfg.budgets:
        raise ConfigError("budgets: at least one budget is required")
    for i, b in enumerate(cfg.budgets):
        if isinstance(b, bool) or not isinstance(b, (int, float)):
            raise ConfigError(f"budgets[{i}]: expected a number, got {b!r}")
        _positive(b, f"budgets[{i}]")
    if cfg.seed < 0:
        raise ConfigError("seed: must be non-negative")
    _positive(cfg.population.count, "population.count")
    for name in ("income", "gas", "electric", "summer_fraction", "roof_area"):
        _marginal(getattr(cfg.population, name), f"population.{name}")
    for name in ("income_gas_correlation", "roof_gas_correlation"):
        if not -1 <= getattr(cfg.population, name) <= 1:
            raise ConfigError(f"population.{name}: must lie in [-1, 1]")
    rate = _rate(cfg.cost.discount_rate, "cost.discount_rate")
    if not rate > -1:
        raise ConfigError("cost.discount_rate: must exceed -1")
    if cfg.cost.payback_T < 1:
        raise ConfigError("cost.payback_T: must be at least 1")
    _positive(cfg.cost.gas_price, "cost.gas_price")
    _positive(cfg.cost.electric_price, "cost.electric_price")
    if cfg.cost.threshold_noise < 0:
        raise ConfigError("cost.threshold_noise: must be non-negative")
    for f in dataclasses.fields(PricesSection):
        _positive(getattr(cfg.prices, f.name), f"prices.{f.name}")
    if not cfg.cop.cop_at_reference > 1:
        raise ConfigError("cop.cop_at_reference: must exceed 1")
    if not cfg.cop.floor >= 1:
        raise ConfigError("cop.floor: must be at least 1")
    if cfg.retrofit.self_consumption not in ("annual", "daily"):
        raise ConfigError("retrofit.self_consumption: must be 'annual' or 'daily'")
    if not 0 <= cfg.retrofit.daytime_fraction <= 1:
        raise ConfigError("retrofit.daytime_fraction: must lie in [0, 1]")
    _positive(cfg.retrofit.area_per_kw, "retrofit.area_per_kw")
    _positive(cfg.retrofit.appliance_efficiency_ratio, "retrofit.appliance_efficiency_ratio")
    if cfg.carbon.gas_emission_factor < 0:
        raise ConfigError("carbon.gas_emission_factor: must be non-negative")
    if cfg.survey.n < 1:
        raise ConfigError("survey.n: must be at least 1")
    _positive(cfg.survey.nominal_incentive, "survey.nominal_incentive")
    _positive(cfg.survey.alpha, "survey.alpha")
    _positive(cfg.survey.reward_cap_multiplier, "survey.reward_cap_multiplier")
    if len(cfg.survey.tier_quantiles) != 4 or not all(0 < q < 1 for q in cfg.survey.tier_quantiles) \
            or sorted(cfg.survey.tier_quantiles) != list(cfg.survey.tier_quantiles):
        raise ConfigError("survey.tier_quantiles: need 4 increasing values in (0, 1)")
    if cfg.survey.tier_granularity < 0:
        raise ConfigError("survey.tier_granularity: must be non-negative")
    if cfg.survey.extra_rounds < 0:
        raise ConfigError("survey.extra_rounds: must be non-negative")
    if cfg.equity.mode not in EQUITY_MODES:
        raise ConfigError(f"equity.mode: must be one of {list(EQUITY_MODES)}")
    try:
        EquitySpec(tuple(cfg.equity.groups), tuple(cfg.equity.shares))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"equity.shares: {exc}") from None
    if cfg.equity.horizon_years < 1:
        raise ConfigError("equity.horizon_years: must be at least 1")
    if cfg.equity.over_time and cfg.equity.mode == "Equity":
        raise ConfigError("equity.over_time: use StrictEquityOverTime or RelaxedEquityOverTime instead")
    for i, T in enumerate(cfg.sweep.payback_T or []):
        if isinstance(T, bool) or not isinstance(T, int) or T < 1:
            raise ConfigError(f"sweep.payback_T[{i}]: expected an integer >= 1, got {T!r}")
    for i, r in enumerate(cfg.sweep.discount_rate or []):
        if not _rate(r, f"sweep.discount_rate[{i}]") > -1:
            raise ConfigError(f"sweep.discount_rate[{i}]: must exceed -1")
    for i, g in enumerate(cfg.sweep.grid or []):
        if not isinstance(g, str):
            raise ConfigError(f"sweep.grid[{i}]: expected a trace name or path")
    for i, T in enumerate(cfg.breakeven.horizons):
        if isinstance(T, bool) or not isinstance(T, int) or T < 1:
            raise ConfigError(f"breakeven.horizons[{i}]: expected an integer >= 1")
    for i, n in enumerate(cfg.survey_diag.n_values):
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise ConfigError(f"survey_diag.n_values[{i}]: expected an integer >= 1")
    if cfg.survey_diag.seeds < 1:
        raise ConfigError("survey_diag.seeds: must be at least 1")
    _positive(cfg.survey_diag.budget, "survey_diag.budget")


def population_spec(cfg: RunConfig) -> PopulationSpec:
    p = cfg.population
    return PopulationSpec(
        count=p.count, seed=cfg.seed,
        income=_marginal(p.income, "population.income"),
        gas=_marginal(p.gas, "population.gas"),
        electric=_marginal(p.electric, "population.electric"),
        summer_fraction=_marginal(p.summer_fraction, "population.summer_fraction"),
        roof_area=_marginal(p.roof_area, "population.roof_area"),
        income_gas_correlation=p.income_gas_correlation,
        roof_gas_correlation=p.roof_gas_correlation)


def base_scenario(cfg: RunConfig) -> Scenario:
    r = cfg.retrofit
    return Scenario(
        name=cfg.name, seed=cfg.seed, population=population_spec(cfg), population_csv=cfg.population.csv,
        cost=CostScenario(_rate(cfg.cost.discount_rate, "cost.discount_rate"), cfg.cost.payback_T,
                          cfg.cost.gas_price, cfg.cost.electric_price),
        prices=EquipmentPrices(**dataclasses.asdict(cfg.prices)),
        cop=CopModel(**dataclasses.asdict(cfg.cop)),
        retrofit=RetrofitParams(appliance_efficiency_ratio=r.appliance_efficiency_ratio,
                                daytime_fraction=r.daytime_fraction, area_per_kw=r.area_per_kw,
                                heating_base_temp=r.heating_base_temp, solar_in_both=r.solar_in_both,
                                self_consumption=r.self_consumption),
        temperature_profile=r.temperature_profile, solar_profile=r.solar_profile,
        grid=cfg.carbon.grid, gas_emission_factor=cfg.carbon.gas_emission_factor,
        scc_table=cfg.carbon.scc_table, scc_year=cfg.carbon.scc_year,
        budgets=tuple(float(b) for b in cfg.budgets), survey_n=cfg.survey.n,
        threshold_noise=cfg.cost.threshold_noise, equity_mode=cfg.equity.mode,
        equity=EquitySpec(tuple(cfg.equity.groups), tuple(cfg.equity.shares)),
        over_time=cfg.equity.over_time, horizon_years=cfg.equity.horizon_years,
        rollover=cfg.equity.rollover, extra_rounds=cfg.survey.extra_rounds,
        nominal_incentive=cfg.survey.nominal_incentive, tier_quantiles=tuple(cfg.survey.tier_quantiles),
        tier_granularity=cfg.survey.tier_granularity,
        reward_cap_multiplier=cfg.survey.reward_cap_multiplier, alpha=cfg.survey.alpha)


def scenarios(cfg: RunConfig) -> list[Scenario]:
    """Base scenario expanded over the sweep lists, in a fixed order."""
    base = base_scenario(cfg)
    Ts = cfg.sweep.payback_T or [base.cost.payback_T]
    rates = cfg.sweep.discount_rate or [cfg.cost.discount_rate]
    grids = cfg.sweep.grid or [base.grid]
    swept = bool(cfg.sweep.payback_T or cfg.sweep.discount_rate or cfg.sweep.grid)
    out = []
    for rate, T, grid in itertools.product(rates, Ts, grids):
        r = _rate(rate, "sweep.discount_rate")
        name = f"{cfg.name}[r={r:g},T={T},grid={grid}]" if swept else cfg.name
        out.append(base.replace(name=name, grid=grid,
                                cost=dataclasses.replace(base.cost, discount_rate=r, payback_T=T)))
    return out
