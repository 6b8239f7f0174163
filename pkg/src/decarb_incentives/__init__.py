"""Carbon-reduction incentive allocation: knapsack solvers, an offline LCB bandit, and a simulator."""

from .acceptance import CostScenario, net_benefit, acceptance_threshold, break_even_analysis
from .allocate import (
    AllocationPlan,
    EquitySpec,
    KnapsackItem,
    solve_equity_knapsack,
    solve_knapsack,
    solve_multiyear,
    solve_multiyear_equity,
)
from .bandit import Arm, LcbEstimator, best_arms, build_arms, fit_lcb, required_samples, simulate_survey
from .pipeline import RunResult, Scenario, prepare, evaluate, run_scenario
from .population import Context, Household, PopulationSpec, discretize_contexts, generate_population, ingest_households
from .retrofit import Package, evaluate_retrofit

__version__ = "0.1.0"

__all__ = [
    "AllocationPlan", "Arm", "Context", "CostScenario", "EquitySpec", "Household", "KnapsackItem",
    "LcbEstimator", "Package", "PopulationSpec", "RunResult", "Scenario", "acceptance_threshold",
    "best_arms", "break_even_analysis", "build_arms", "discretize_contexts", "evaluate",
    "evaluate_retrofit", "fit_lcb", "generate_population", "ingest_households", "net_benefit",
    "prepare", "required_samples", "run_scenario", "simulate_survey", "solve_equity_knapsack",
    "solve_knapsack", "solve_multiyear", "solve_multiyear_equity",
]
