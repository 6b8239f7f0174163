"""Offline contextual bandit with pessimistic (lower-confidence-bound) arm selection.

An arm is a (package, incentive tier) offer.  Survey responses are
(context, arm, reward) triples; the learner keeps per-(arm, context) counts
and means and scores each cell by

    lcb = max(mean - alpha * sqrt(ln N / T), 0)

where N is the survey size and T the cell count.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyThresholds, NoConvergence, SurveyLargerThanPopulation
from .population import N_CONTEXTS
from .retrofit import PACKAGES, Package

N_TIERS = 5
DEFAULT_ALPHA = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class Arm:
    index: int
    package: Package
    tier: int  # 1 is the nominal tier
    incentive: float  # USD

    @property
    def is_nominal(self) -> bool:
        return self.tier == 1


def _tier_amounts(positive: np.ndarray, nominal: float, quantiles, granularity: float) -> list[float]:
    step = granularity if granularity > 0 else max(1.0, 1e-3 * nominal)
    amounts = [nominal]
    qs = np.quantile(positive, quantiles) if positive.size else np.full(len(quantiles), nominal)
    for q in qs:
        a = math.ceil(q / granularity) * granularity if granularity > 0 else float(q)
        # equal quantiles are pushed apart by one step so tiers stay strictly increasing
        amounts.append(max(a, amounts[-1] + step))
    return [float(a) for a in amounts]


def build_arms(thresholds, packages: Sequence[Package] = PACKAGES, *, nominal: float = 100.0,
               quantiles: Sequence[float] = (0.2, 0.4, 0.6, 0.8),
               granularity: float = 10.0) -> list[Arm]:
    """Five incentive tiers per package from quantiles of positive thresholds.

    ``thresholds`` is a flat sequence of ``AcceptanceThreshold`` or a mapping
    from package to such a sequence.  Tier 1 is the nominal amount; tiers 2-5
    are the given quantiles rounded up to ``granularity`` dollars.
    """
    if len(quantiles) != N_TIERS - 1:
        raise ValueError(f"need {N_TIERS - 1} quantiles, got {len(quantiles)}")
    if isinstance(thresholds, Mapping):
        flat = [t for seq in thresholds.values() for t in seq]
    else:
        flat = list(thresholds)
    if not flat:
        raise EmptyThresholds("cannot build arms from an empty threshold set")
    if nominal <= 0:
        raise ValueError("nominal incentive must be positive")
    arms = []
    for p in packages:
        p = Package(p)
        pos = np.array([t.w for t in flat if t.package is p and t.w > 0])
        for tier, amount in enumerate(_tier_amounts(pos, nominal, quantiles, granularity), start=1):
            arms.append(Arm(len(arms), p, tier, amount))
    return arms


def arm_lookup(arms: Sequence[Arm]) -> dict[tuple[Package, int], Arm]:
    return {(a.package, a.tier): a for a in arms}


# --------------------------------------------------------------------------
# Survey data


@dataclass(frozen=True)
class SurveyResponse:
    context: int
    arm: int
    reward: float


@dataclass
class SurveyDataset:
    """Columnar survey log; row j is (contexts[j], arms[j], rewards[j])."""

    contexts: np.ndarray
    arms: np.ndarray
    rewards: np.ndarray
    accepted: np.ndarray | None = None
    household_ids: Sequence[str] | None = None

    def __post_init__(self):
        self.contexts = np.asarray(self.contexts, dtype=np.int64)
        self.arms = np.asarray(self.arms, dtype=np.int64)
        self.rewards = np.asarray(self.rewards, dtype=float)
        if not (self.contexts.shape == self.arms.shape == self.rewards.shape):
            raise ValueError("survey columns differ in length")
        if (self.rewards < 0).any():
            raise ValueError("survey rewards must be non-negative")

    def __len__(self) -> int:
        return int(self.rewards.size)

    def __iter__(self):
        for c, k, r in zip(self.contexts, self.arms, self.rewards):
            yield SurveyResponse(int(c), int(k), float(r))

    @classmethod
    def from_responses(cls, responses: Sequence[SurveyResponse]) -> "SurveyDataset":
        return cls([r.context for r in responses], [r.arm for r in responses],
                   [r.reward for r in responses])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["context", "arm", "reward"])
            for c, k, r in zip(self.contexts, self.arms, self.rewards):
                w.writerow([int(c), int(k), repr(float(r))])

    @classmethod
    def from_csv(cls, path) -> "SurveyDataset":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        return cls([int(r["context"]) for r in rows], [int(r["arm"]) for r in rows],
                   [float(r["reward"]) for r in rows])


def context_reductions(context_index: np.ndarray, reductions: np.ndarray,
                       n_contexts: int = N_CONTEXTS) -> np.ndarray:
    """Mean annual reduction per (package, context); zero for empty contexts.

    ``reductions`` has shape (n_households, n_packages).
    """
    context_index = np.asarray(context_index)
    reductions = np.asarray(reductions, dtype=float)
    counts = np.bincount(context_index, minlength=n_contexts)
    out = np.zeros((reductions.shape[1], n_contexts))
    for p in range(reductions.shape[1]):
        sums = np.bincount(context_index, weights=reductions[:, p], minlength=n_contexts)
        out[p] = np.divide(sums, counts, out=np.zeros(n_contexts), where=counts > 0)
    return out


def reward_cap(arms: Sequence[Arm], R: np.ndarray, *, multiplier: float = 10.0,
               percentile: float = 99.0, packages: Sequence[Package] = PACKAGES) -> float:
    """Clamp level for raw rewards: a multiple of a high percentile of R / I."""
    pidx = {Package(p): i for i, p in enumerate(packages)}
    ratios = np.concatenate([np.maximum(R[pidx[a.package]], 0.0) / a.incentive for a in arms])
    level = float(np.percentile(ratios, percentile)) * multiplier
    return level if level > 0 else 1.0


def simulate_survey(context_index, arms: Sequence[Arm], thresholds: np.ndarray, reductions: np.ndarray,
                    N: int, rng: np.random.Generator, *, cap: float | None = None,
                    arm_weights: Sequence[float] | None = None,
                    packages: Sequence[Package] = PACKAGES,
                    household_ids: Sequence[str] | None = None,
                    n_contexts: int = N_CONTEXTS) -> SurveyDataset:
    """Offer one random arm to each of N distinct random households.

    ``thresholds`` and ``reductions`` have shape (n_households, n_packages)
    in ``packages`` order.  A household accepts when the offered incentive
    covers its threshold for the offered package; the reward is then the
    context-mean reduction of that package per offered dollar, clamped to
    ``cap`` and divided by it so rewards lie in [0, 1].
    """
    context_index = np.asarray(context_index, dtype=np.int64)
    thresholds = np.asarray(thresholds, dtype=float)
    n = context_index.size
    if N > n:
        raise SurveyLargerThanPopulation(f"survey of {N} exceeds population of {n}")
    if N < 1:
        raise ValueError("survey size must be at least 1")
    R = context_reductions(context_index, reductions, n_contexts)
    if cap is None:
        cap = reward_cap(arms, R, packages=packages)
    pidx = {Package(p): i for i, p in enumerate(packages)}
    arm_pkg = np.array([pidx[a.package] for a in arms])
    arm_inc = np.array([a.incentive for a in arms])

    who = rng.choice(n, size=N, replace=False)
    if arm_weights is None:
        k = rng.integers(0, len(arms), size=N)
    else:
        p = np.asarray(arm_weights, dtype=float)
        k = rng.choice(len(arms), size=N, p=p / p.sum())
    ctx = context_index[who]
    accept = arm_inc[k] >= thresholds[who, arm_pkg[k]]
    raw = np.maximum(R[arm_pkg[k], ctx], 0.0) / arm_inc[k]
    reward = np.where(accept, np.minimum(raw, cap) / cap, 0.0)
    ids = [household_ids[i] for i in who] if household_ids is not None else None
    return SurveyDataset(ctx, k, reward, accepted=accept, household_ids=ids)


# --------------------------------------------------------------------------
# Estimation


@dataclass(frozen=True)
class LcbEstimator:
    counts: np.ndarray  # (K, C) integer
    means: np.ndarray  # (K, C)
    lcb: np.ndarray  # (K, C)
    alpha: float
    N: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape


def lcb_scores(means, counts, N: int, alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    """Elementwise max(mean - alpha sqrt(ln N / T), 0); zero where T = 0."""
    means = np.asarray(means, dtype=float)
    counts = np.asarray(counts)
    width = np.full(means.shape, np.inf)
    seen = counts > 0
    width[seen] = alpha * np.sqrt(math.log(N) / counts[seen])
    return np.where(seen, np.maximum(means - width, 0.0), 0.0)


def fit_lcb(data: SurveyDataset, K: int, C: int = N_CONTEXTS, alpha: float = DEFAULT_ALPHA) -> LcbEstimator:
    N = len(data)
    if N < 1:
        raise ValueError("cannot fit an empty survey")
    cell = data.arms * C + data.contexts
    counts = np.bincount(cell, minlength=K * C).reshape(K, C)
    sums = np.bincount(cell, weights=data.rewards, minlength=K * C).reshape(K, C)
    means = np.divide(sums, counts, out=np.zeros((K, C)), where=counts > 0)
    return LcbEstimator(counts, means, lcb_scores(means, counts, N, alpha), alpha, N)


@dataclass(frozen=True)
class BestArmTable:
    arm_of_context: np.ndarray  # (C,) arm index

    def __getitem__(self, context) -> int:
        idx = context.index if hasattr(context, "index") else int(context)
        return int(self.arm_of_context[idx])

    def __len__(self) -> int:
        return int(self.arm_of_context.size)


def best_arms(est: LcbEstimator, arms: Sequence[Arm]) -> BestArmTable:
    """Per context, the arm with the largest LCB; ties go to the cheapest, then lowest index."""
    K, C = est.lcb.shape
    if K != len(arms):
        raise ValueError(f"estimator has {K} arms, {len(arms)} given")
    rank = sorted(range(K), key=lambda k: (arms[k].incentive, arms[k].index))
    ordered = est.lcb[rank]  # argmax returns the first maximum in this order
    pick = np.asarray(rank)[np.argmax(ordered, axis=0)]
    return BestArmTable(pick)


def required_samples(C_star: float, eps: float, confidence: float | None = None,
                     max_iter: int = 10_000) -> int:
    """Smallest N with N >= 4 C* ln(N)/eps^2 and N >= 8 C* ln(N).

    Found by iterating N <- max(4 C* ln N / eps^2, 8 C* ln N) from above
    the larger root.  With ``confidence`` = delta the log term becomes
    ln(N / delta).
    """
    if C_star < 1:
        raise ValueError("coverage constant must be at least 1")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if confidence is not None and not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    a = max(4.0 * C_star / eps ** 2, 8.0 * C_star)
    shift = -math.log(confidence) if confidence is not None else 0.0

    def f(n):
        return a * (math.log(n) + shift)

    n = max(a * a, math.e * a, 3.0)  # above the upper fixed point of n = a ln n
    for _ in range(max_iter):
        nxt = f(n)
        if abs(nxt - n) < 1e-9 * n:
            break
        n = nxt
    else:
        raise NoConvergence(f"no fixed point after {max_iter} iterations")
    N = math.ceil(n - 1e-9)
    while N - 1 >= 2 and N - 1 >= f(N - 1):  # tighten to the smallest integer satisfying the bound
        N -= 1
    while N < f(N):
        N += 1
    return int(N)
