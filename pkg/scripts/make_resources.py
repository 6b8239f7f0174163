"""Regenerate the bundled profile and trace files under src/decarb_incentives/data.

All files are synthetic stand-ins (no external data is fetched).  Run from the
repository root:  python3 scripts/make_resources.py
"""

import csv
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

DATA = Path(__file__).resolve().parents[1] / "src" / "decarb_incentives" / "data"
DAYS = 365
HOURS = 8784  # 2020 is a leap year

# Annual-mean intensity (gCO2eq/kWh) for each bundled grid, cleanest first.
GRIDS = {"BPAT": 95.0, "CAISO": 235.0, "ISO-NE": 290.0, "PJM": 395.0, "PACE": 585.0, "SC": 640.0}

# SCC at 2% near-term discounting, 2020 USD/tCO2, decade anchors; annual
# values are linearly interpolated between anchors.
SCC_ANCHORS = {2020: 190, 2030: 230, 2040: 270, 2050: 310, 2060: 350, 2070: 380, 2080: 410}


def temperature(rng):
    d = np.arange(DAYS)
    base = 10.0 + 13.0 * np.cos(2 * np.pi * (d - 200) / DAYS)
    return np.round(base + rng.normal(0.0, 2.5, DAYS), 2)


def solar(rng):
    d = np.arange(DAYS)
    shape = 4.0 + 1.5 * np.cos(2 * np.pi * (d - 172) / DAYS)
    shape *= rng.uniform(0.85, 1.05, DAYS)
    return np.round(shape * 1460.0 / shape.sum(), 4)


def grid(rng, mean):
    h = np.arange(HOURS)
    daily = 0.12 * np.sin(2 * np.pi * (h % 24 - 8) / 24)
    seasonal = 0.08 * np.cos(2 * np.pi * h / HOURS)
    noise = rng.normal(0.0, 0.05, HOURS)
    trace = 1.0 + daily + seasonal + noise
    return trace * mean / trace.mean()


def main():
    rng = np.random.default_rng(2020)
    DATA.mkdir(parents=True, exist_ok=True)
    (DATA / "grids").mkdir(exist_ok=True)
    with open(DATA / "temperature.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day", "temp_c"])
        for i, t in enumerate(temperature(rng), start=1):
            w.writerow([i, f"{t:.2f}"])
    with open(DATA / "solar_profile.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day", "kwh_per_kw"])
        for i, s in enumerate(solar(rng), start=1):
            w.writerow([i, f"{s:.4f}"])
    start = datetime(2020, 1, 1)
    for name, mean in GRIDS.items():
        trace = grid(rng, mean)
        with open(DATA / "grids" / f"{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["timestamp", "gco2_per_kwh"])
            for i, v in enumerate(trace):
                w.writerow([(start + timedelta(hours=i)).strftime("%Y-%m-%dT%H:%M"), f"{v:.2f}"])
    years = sorted(SCC_ANCHORS)
    with open(DATA / "scc.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["year", "scc_usd_per_t"])
        for y in range(years[0], years[-1] + 1):
            w.writerow([y, f"{np.interp(y, years, [SCC_ANCHORS[a] for a in years]):.1f}"])


if __name__ == "__main__":
    main()
