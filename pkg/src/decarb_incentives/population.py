"""Household records, CSV ingestion, synthetic generation and context bins."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.special import ndtr

from .errors import (
    EmptyPopulation,
    InvalidSpec,
    MissingColumn,
    NegativeUsage,
    NonNumericField,
    PopulationTooSmall,
)

N_BINS = 5
N_CONTEXTS = N_BINS ** 3


class IncomeGroup(str, enum.Enum):
    LOW = "Low"
    MEDIUM = "Medium"
    HIGH = "High"


INCOME_GROUPS = (IncomeGroup.LOW, IncomeGroup.MEDIUM, IncomeGroup.HIGH)


@dataclass(frozen=True)
class Household:
    id: str
    annual_gas: float  # therms / yr
    annual_electric: float  # kWh / yr
    summer_gas: float  # therms / yr, non-heating proxy
    median_income: float  # USD / yr
    income_group: IncomeGroup
    roof_area: float  # m^2

    @property
    def heating_gas(self) -> float:
        return self.annual_gas - self.summer_gas


@dataclass(frozen=True)
class Context:
    income_quintile: int
    gas_quintile: int
    electric_quintile: int

    @property
    def index(self) -> int:
        return ((self.income_quintile - 1) * 25
                + (self.gas_quintile - 1) * 5
                + (self.electric_quintile - 1))

    @classmethod
    def from_index(cls, index: int) -> "Context":
        if not 0 <= index < N_CONTEXTS:
            raise ValueError(f"context index {index} outside 0..{N_CONTEXTS - 1}")
        return cls(index // 25 + 1, (index // 5) % 5 + 1, index % 5 + 1)


# --------------------------------------------------------------------------
# CSV ingestion

DEFAULT_SCHEMA = {
    "id": "id",
    "annual_gas": "gas_therms_yr",
    "annual_electric": "electric_kwh_yr",
    "summer_gas": "summer_gas_therms_yr",
    "median_income": "median_income_usd",
    "roof_area": "roof_m2",
}

_NUMERIC_FIELDS = ("annual_gas", "annual_electric", "summer_gas", "median_income", "roof_area")


def _check_household(row: int, rec: dict, schema: Mapping[str, str]) -> None:
    for name in ("annual_gas", "annual_electric", "summer_gas", "roof_area"):
        if rec[name] < 0:
            raise NegativeUsage(f"negative value {rec[name]}", row=row, column=schema[name])
    if rec["summer_gas"] > rec["annual_gas"]:
        raise NegativeUsage(
            f"summer gas {rec['summer_gas']} exceeds annual gas {rec['annual_gas']}"
            " (heating gas would be negative)",
            row=row, column=schema["summer_gas"])


def ingest_households(path, schema: Mapping[str, str] | None = None) -> list[Household]:
    """Read one household per CSV row and assign income terciles.

    `schema` maps Household field names to CSV column names; missing entries
    fall back to the default column names.
    """
    schema = {**DEFAULT_SCHEMA, **(schema or {})}
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for fname, col in schema.items():
            if col not in header:
                raise MissingColumn(f"required column for {fname} not found", row=1, column=col)
        for i, raw in enumerate(reader, start=2):
            rec = {"id": raw[schema["id"]].strip()}
            for name in _NUMERIC_FIELDS:
                text = (raw[schema[name]] or "").strip()
                try:
                    value = float(text)
                except ValueError:
                    raise NonNumericField(f"cannot parse {text!r} as a number",
                                          row=i, column=schema[name]) from None
                if not np.isfinite(value):
                    raise NonNumericField(f"non-finite value {text!r}", row=i, column=schema[name])
                rec[name] = value
            _check_household(i, rec, schema)
            records.append(rec)
    if not records:
        raise EmptyPopulation(f"no household rows in {path}")
    return _with_income_groups(records)


def write_households_csv(pop: Sequence[Household], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([DEFAULT_SCHEMA[k] for k in DEFAULT_SCHEMA])
        for h in pop:
            w.writerow([h.id, repr(h.annual_gas), repr(h.annual_electric), repr(h.summer_gas),
                        repr(h.median_income), repr(h.roof_area)])


def _with_income_groups(records: list[dict]) -> list[Household]:
    income = np.array([r["median_income"] for r in records], dtype=float)
    groups = quantile_bins(income, 3)
    return [Household(income_group=INCOME_GROUPS[g], **r) for r, g in zip(records, groups)]


# --------------------------------------------------------------------------
# Rank-based quantile bins

def quantile_bins(values, n_bins: int) -> np.ndarray:
    """0-based bin per element by rank over the whole array.

    Equal values share the lowest rank of their tie group, so they always
    land in the same (lowest feasible) bin.
    """
    values = np.asarray(values, dtype=float)
    n = len(values)
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    # rank of each sorted position = index of first equal value
    first = np.empty(n, dtype=np.int64)
    if n:
        is_new = np.empty(n, dtype=bool)
        is_new[0] = True
        is_new[1:] = sorted_vals[1:] != sorted_vals[:-1]
        starts = np.flatnonzero(is_new)
        first = starts[np.cumsum(is_new) - 1]
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = first
    return (ranks * n_bins) // n


@dataclass(frozen=True)
class QuintileBoundaries:
    """Per-variable (low, high) value range observed in each quintile bin."""

    income: tuple
    gas: tuple
    electric: tuple

    def as_rows(self):
        for var in ("income", "gas", "electric"):
            for q, (lo, hi) in enumerate(getattr(self, var), start=1):
                yield var, q, lo, hi


def discretize_contexts(pop: Sequence[Household]) -> tuple[dict[str, Context], QuintileBoundaries]:
    if len(pop) < N_BINS:
        raise PopulationTooSmall(f"need at least {N_BINS} households, got {len(pop)}")
    cols = {
        "income": np.array([h.median_income for h in pop]),
        "gas": np.array([h.annual_gas for h in pop]),
        "electric": np.array([h.annual_electric for h in pop]),
    }
    bins = {k: quantile_bins(v, N_BINS) for k, v in cols.items()}
    contexts = {
        h.id: Context(int(bins["income"][i]) + 1, int(bins["gas"][i]) + 1,
                      int(bins["electric"][i]) + 1)
        for i, h in enumerate(pop)
    }
    bounds = {}
    for k, v in cols.items():
        ranges = []
        for q in range(N_BINS):
            members = v[bins[k] == q]
            ranges.append((float(members.min()), float(members.max())) if len(members)
                          else (float("nan"), float("nan")))
        bounds[k] = tuple(ranges)
    return contexts, QuintileBoundaries(**bounds)


# --------------------------------------------------------------------------
# Synthetic generation

@dataclass(frozen=True)
class Marginal:
    """A named parametric family.

    lognormal: params mean (arithmetic) and sigma (log-space sd);
    uniform: low, high; normal: mean, sd; constant: value.
    """

    family: str
    params: Mapping[str, float] = field(default_factory=dict)

    def validate(self, name: str) -> None:
        p = self.params
        need = {"lognormal": ("mean", "sigma"), "uniform": ("low", "high"),
                "normal": ("mean", "sd"), "constant": ("value",)}
        if self.family not in need:
            raise InvalidSpec(f"{name}: unknown family {self.family!r}")
        missing = [k for k in need[self.family] if k not in p]
        if missing:
            raise InvalidSpec(f"{name}: missing parameters {missing}")
        extra = sorted(set(p) - set(need[self.family]))
        if extra:
            raise InvalidSpec(f"{name}: unexpected parameters {extra}")
        if self.family == "lognormal" and (p["mean"] <= 0 or p["sigma"] <= 0):
            raise InvalidSpec(f"{name}: lognormal mean and sigma must be positive")
        if self.family == "uniform" and not p["high"] > p["low"]:
            raise InvalidSpec(f"{name}: uniform needs high > low")
        if self.family == "normal" and p["sd"] <= 0:
            raise InvalidSpec(f"{name}: normal sd must be positive")

    @property
    def mean(self) -> float:
        p = self.params
        return {"lognormal": lambda: p["mean"], "uniform": lambda: (p["low"] + p["high"]) / 2,
                "normal": lambda: p["mean"], "constant": lambda: p["value"]}[self.family]()

    def from_normal(self, z: np.ndarray) -> np.ndarray:
        """Map standard-normal draws through this marginal (Gaussian copula)."""
        p = self.params
        if self.family == "lognormal":
            mu = np.log(p["mean"]) - p["sigma"] ** 2 / 2
            return np.exp(mu + p["sigma"] * z)
        if self.family == "uniform":
            return p["low"] + (p["high"] - p["low"]) * ndtr(z)
        if self.family == "normal":
            return p["mean"] + p["sd"] * z
        return np.full_like(z, p["value"], dtype=float)


@dataclass(frozen=True)
class PopulationSpec:
    count: int = 3000
    seed: int = 20200101
    income: Marginal = Marginal("lognormal", {"mean": 75000.0, "sigma": 0.45})
    gas: Marginal = Marginal("lognormal", {"mean": 900.0, "sigma": 0.6})
    electric: Marginal = Marginal("lognormal", {"mean": 8000.0, "sigma": 0.6})
    summer_fraction: Marginal = Marginal("uniform", {"low": 0.1, "high": 1.0})
    roof_area: Marginal = Marginal("uniform", {"low": 10.0, "high": 200.0})
    income_gas_correlation: float = 0.3
    roof_gas_correlation: float = 0.95

    def validate(self) -> None:
        if not isinstance(self.count, (int, np.integer)) or self.count <= 0:
            raise InvalidSpec(f"count must be a positive integer, got {self.count!r}")
        for name in ("income_gas_correlation", "roof_gas_correlation"):
            if not -1.0 <= getattr(self, name) <= 1.0:
                raise InvalidSpec(f"{name} must lie in [-1, 1]")
        for name in ("income", "gas", "electric", "summer_fraction", "roof_area"):
            getattr(self, name).validate(name)
        sf = self.summer_fraction
        lo, hi = _support(sf)
        if lo < 0 or hi > 1:
            raise InvalidSpec("summer_fraction must be supported on [0, 1]")


def _support(m: Marginal) -> tuple[float, float]:
    p = m.params
    if m.family == "uniform":
        return p["low"], p["high"]
    if m.family == "constant":
        return p["value"], p["value"]
    if m.family == "lognormal":
        return 0.0, float("inf")
    return float("-inf"), float("inf")


def generate_population(spec: PopulationSpec) -> list[Household]:
    """Draw a synthetic city; identical output for identical spec and seed."""
    spec.validate()
    n = int(spec.count)
    rng = np.random.default_rng([int(spec.seed) & (2**64 - 1), 0])
    z = rng.standard_normal((5, n))
    rho = spec.income_gas_correlation
    z_income = z[0]
    z_gas = rho * z[0] + np.sqrt(1 - rho * rho) * z[1]
    income = spec.income.from_normal(z_income)
    gas = spec.gas.from_normal(z_gas)
    electric = spec.electric.from_normal(z[2])
    frac = spec.summer_fraction.from_normal(z[3])
    rr = spec.roof_gas_correlation
    roof = spec.roof_area.from_normal(rr * z_gas + np.sqrt(1 - rr * rr) * z[4])
    gas = np.maximum(gas, 0.0)
    electric = np.maximum(electric, 0.0)
    roof = np.maximum(roof, 0.0)
    summer = np.clip(frac, 0.0, 1.0) * gas
    width = len(str(n))
    records = [
        dict(id=f"H{i + 1:0{width}d}", annual_gas=float(gas[i]), annual_electric=float(electric[i]),
             summer_gas=float(summer[i]), median_income=float(income[i]), roof_area=float(roof[i]))
        for i in range(n)
    ]
    return _with_income_groups(records)


def population_arrays(pop: Sequence[Household]) -> dict[str, np.ndarray]:
    """Column view of a population for vectorized stages."""
    return {
        "annual_gas": np.array([h.annual_gas for h in pop]),
        "annual_electric": np.array([h.annual_electric for h in pop]),
        "summer_gas": np.array([h.summer_gas for h in pop]),
        "median_income": np.array([h.median_income for h in pop]),
        "roof_area": np.array([h.roof_area for h in pop]),
    }
