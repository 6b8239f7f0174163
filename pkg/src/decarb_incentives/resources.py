"""Locating and loading bundled input files (profiles, grid traces, SCC table)."""

from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

from .carbon import SccSchedule, load_grid_trace
from .retrofit import Profiles

RESOURCE_ENV = "DECARB_RESOURCES"
_PACKAGE_DATA = Path(__file__).resolve().parent / "data"


def resource_dir() -> Path:
    """Directory holding default inputs; ``$DECARB_RESOURCES`` overrides the bundled copy."""
    env = os.environ.get(RESOURCE_ENV)
    return Path(env) if env else _PACKAGE_DATA


def resolve(path: str | os.PathLike | None, default_name: str) -> Path:
    """Explicit paths win; bare names are looked up in the resource directory."""
    if path is None:
        return resource_dir() / default_name
    p = Path(path)
    if p.is_absolute() or p.exists():
        return p
    return resource_dir() / p


def bundled_grids() -> list[str]:
    return sorted(p.stem for p in (resource_dir() / "grids").glob("*.csv"))


def grid_path(name_or_path: str) -> Path:
    p = Path(name_or_path)
    if p.suffix == ".csv" and (p.is_absolute() or p.exists()):
        return p
    candidate = resource_dir() / "grids" / f"{name_or_path}.csv"
    if not candidate.exists():
        raise FileNotFoundError(f"no grid trace named {name_or_path!r}; bundled: {bundled_grids()}")
    return candidate


def grid_intensity(name_or_path: str) -> float:
    """Annual mean intensity (gCO2eq/kWh) of a named or explicit trace."""
    return float(load_grid_trace(grid_path(name_or_path)).mean())


def _column(path: Path, name: str) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or name not in rows[0]:
        raise ValueError(f"{path}: missing column {name!r}")
    return np.array([float(r[name]) for r in rows])


def load_profiles(temperature: str | None = None, solar: str | None = None) -> Profiles:
    t = _column(resolve(temperature, "temperature.csv"), "temp_c")
    s = _column(resolve(solar, "solar_profile.csv"), "kwh_per_kw")
    return Profiles(t, s)


def load_scc(path: str | None = None) -> SccSchedule:
    return SccSchedule.from_csv(resolve(path, "scc.csv"))
