"""Command-line entry point: ``decarb-incentives {run,breakeven,survey-diag}``.

Exit status 0 on success, 2 for configuration or input-data errors, 3 for
failures during computation.  Diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import acceptance, config, pipeline
from .errors import (
    ConfigError,
    DataError,
    EmptyPopulation,
    InvalidSpec,
    PopulationTooSmall,
    StageError,
    SurveyLargerThanPopulation,
)

log = logging.getLogger("decarb_incentives")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
_INPUT_ERRORS = (ConfigError, DataError, EmptyPopulation, InvalidSpec, PopulationTooSmall,
                 SurveyLargerThanPopulation, FileNotFoundError)


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.=-]+", "_", text).strip("_")


def _load(args) -> config.RunConfig:
    cfg = config.load_config(args.config) if args.config else config.RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.output_dir = args.out
    config.validate(cfg)
    return cfg


def _out_dir(cfg: config.RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_one(scenario: pipeline.Scenario) -> list[pipeline.RunResult]:
    return pipeline.run_scenario(scenario)


def cmd_run(cfg: config.RunConfig, workers: int = 1) -> list[pipeline.RunResult]:
    scenarios = config.scenarios(cfg)
    if workers > 1 and len(scenarios) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            groups = list(pool.map(_run_one, scenarios))
    else:
        groups = [_run_one(s) for s in scenarios]
    results = [r for g in groups for r in g]
    out = _out_dir(cfg)
    for i, r in enumerate(results):
        name = f"{i:03d}_{_slug(r.scenario)}_B{int(r.budget)}.json"
        (out / name).write_text(r.to_json() + "\n", encoding="utf-8")
    (out / "results.csv").write_text(pipeline.long_csv(results), encoding="utf-8")
    (out / "config.yaml").write_text(config.dump_config(cfg), encoding="utf-8")
    return results


def cmd_breakeven(cfg: config.RunConfig) -> acceptance.BreakEvenReport:
    s = config.base_scenario(cfg)
    pop, _ = pipeline._load_population(s)
    outcomes = pipeline._retrofit(s, pop)
    report = acceptance.break_even_analysis(pop, outcomes, s.cost, tuple(cfg.breakeven.horizons))
    out = _out_dir(cfg)
    with open(out / "breakeven_summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["horizon", "fraction_failing"])
        for T in report.horizons:
            w.writerow([T, repr(report.fraction_failing[T])])
    with open(out / "breakeven.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["household_id", "package", "annual_saving", "install_cost", "break_even_year"]
                   + [f"net_benefit_T{T}" for T in report.horizons])
        for r in report.rows:
            year = "inf" if r.break_even_year == float("inf") else str(int(r.break_even_year))
            w.writerow([r.household_id, r.package.value, repr(r.annual_saving), repr(r.install_cost), year]
                       + [repr(r.net_benefit[T]) for T in report.horizons])
    return report


COVERAGE_BINS = ("0", "1", "2", "3-4", "5+")


def _coverage_hist(counts: np.ndarray) -> list[int]:
    c = counts.ravel()
    return [int((c == 0).sum()), int((c == 1).sum()), int((c == 2).sum()),
            int(((c >= 3) & (c <= 4)).sum()), int((c >= 5).sum())]


def cmd_survey_diag(cfg: config.RunConfig) -> list[dict]:
    """Bandit value against survey size, averaged over seeds, plus cell coverage."""
    s = config.base_scenario(cfg)
    prep = pipeline.prepare(s)
    too_big = [n for n in cfg.survey_diag.n_values if n > prep.n]
    if too_big:
        raise ConfigError(f"survey_diag.n_values: {too_big[0]} exceeds the population of {prep.n}")
    budget = cfg.survey_diag.budget
    optimal = pipeline.run_optimal(prep, budget)
    rows = []
    for n in cfg.survey_diag.n_values:
        values, pct, hist = [], [], np.zeros(len(COVERAGE_BINS), dtype=np.int64)
        responses = 0
        for k in range(cfg.survey_diag.seeds):
            p = pipeline.resurvey(prep, n, seed_offset=k)
            b = pipeline.run_bandit(p, budget)
            values.append(b.value_usd)
            pct.append(b.percent)
            hist += _coverage_hist(p.estimator.counts)
            responses += int(p.estimator.counts.sum())
        rows.append({
            "N": n, "seeds": cfg.survey_diag.seeds, "budget": budget,
            "bandit_value_usd": float(np.mean(values)), "bandit_percent": float(np.mean(pct)),
            "optimal_value_usd": optimal.value_usd,
            "responses_per_seed": responses // cfg.survey_diag.seeds,
            **{f"cells_T[{b}]": int(h) / cfg.survey_diag.seeds for b, h in zip(COVERAGE_BINS, hist)},
        })
    out = _out_dir(cfg)
    with open(out / "survey_diag.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return rows


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="decarb-incentives",
                                     description="Carbon-reduction incentive allocation simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "run every scenario and budget in the config"),
                            ("breakeven", "break-even analysis of the population"),
                            ("survey-diag", "Bandit value against survey size")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML run configuration (defaults when omitted)")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--workers", type=int, default=1, help="parallel scenario workers")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = _load(args)
        if args.workers < 1:
            raise ConfigError("--workers: must be at least 1")
        if args.command == "run":
            results = cmd_run(cfg, args.workers)
            log.info("wrote %d results to %s", len(results), cfg.output_dir)
        elif args.command == "breakeven":
            report = cmd_breakeven(cfg)
            log.info("failing fractions %s", report.fraction_failing)
        else:
            cmd_survey_diag(cfg)
    except StageError as exc:
        code = EXIT_CONFIG if isinstance(exc.cause, _INPUT_ERRORS) else EXIT_RUNTIME
        print(f"error: {exc}", file=sys.stderr)
        return code
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - report any other failure as a runtime error
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
