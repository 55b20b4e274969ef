"""
incentives.py

Numerical checks of the mechanism's incentive properties:

- properness: under its own belief an agent never expects more from another
  report than from its clipped belief;
- truthful optimum: maximizing the agent's expected utility over the simplex
  lands on its belief;
- strategy grid: a truthful report is never beaten by the manipulated one;
- aggregation oracle: the log-space pool equals the literal inverse of the
  weighted average payment, which itself ignores rewards and varpi.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from itertools import product
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import softmax

from .market import LedgerEntry, aggregate_beliefs, aggregate_beliefs_literal, score_report
from .model import TypeDistribution, normalize
from .sensor_agent import (
    EPSILON_REPORT,
    Report,
    ScoringRule,
    Strategy,
    agent_expected_utility,
    clip_report,
    make_report,
)

logger = logging.getLogger(__name__)

PROPERNESS_SLACK = 1e-9
OPTIMUM_TOLERANCE = 1e-3
ORACLE_TOLERANCE = 1e-9
INVARIANCE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class IncentiveInstance:
    """
    One random agent situation.

    Attributes:
        belief: Agent belief b.
        varpi: Decision weight in (0, 10].
        p_table: (h x m) column-stochastic P(d_i | theta_j).
        rewards: Instantaneous rewards earned so far.
    """

    belief: TypeDistribution
    varpi: float
    p_table: np.ndarray
    rewards: float


def random_instance(rng: np.random.Generator, m: Optional[int] = None) -> IncentiveInstance:
    m = m or int(rng.integers(2, 4))
    h = int(rng.integers(2, 15))
    return IncentiveInstance(
        belief=normalize(rng.dirichlet(np.ones(m))),
        varpi=10.0 * (1.0 - rng.random()),
        p_table=rng.dirichlet(np.ones(h), size=m).T,
        rewards=float(rng.uniform(-10.0, 10.0, size=int(rng.integers(0, 5))).sum()),
    )


def expected_utility(instance: IncentiveInstance, report: TypeDistribution) -> float:
    return agent_expected_utility(
        report,
        instance.belief,
        instance.varpi,
        instance.p_table,
        score_report,
        rewards=instance.rewards,
    )


@dataclass(frozen=True)
class PropernessResult:
    instances: int
    comparisons: int
    violations: int
    worst_gap: float

    @property
    def passed(self) -> bool:
        return self.violations == 0


def properness_suite(
    samples: int = 1000,
    reports_per_instance: int = 100,
    seed: int = 0,
    epsilon: float = EPSILON_REPORT,
) -> PropernessResult:
    """Compare EU(b, clip(b)) with EU(b, clip(r)) for random reports r."""
    rng = np.random.default_rng(seed)
    violations, worst = 0, -math.inf
    for _ in range(samples):
        instance = random_instance(rng)
        truthful = expected_utility(instance, clip_report(instance.belief, epsilon))
        for _ in range(reports_per_instance):
            other = clip_report(rng.dirichlet(np.ones(instance.belief.m)), epsilon)
            gap = expected_utility(instance, other) - truthful
            worst = max(worst, gap)
            if gap > PROPERNESS_SLACK:
                violations += 1
    result = PropernessResult(samples, samples * reports_per_instance, violations, worst)
    logger.info(f"Properness: {result.violations} violations in {result.comparisons} comparisons")
    return result


def maximize_agent_utility(
    instance: IncentiveInstance,
    scoring_rule: ScoringRule = score_report,
    epsilon: float = EPSILON_REPORT,
) -> TypeDistribution:
    """
    Report maximizing the agent's expected utility over the open simplex.

    The objective is agent_expected_utility itself, evaluated on the clipped
    softmax of unconstrained logits. BFGS runs on central finite-difference
    gradients; dividing by varpi only rescales the objective.

    Args:
        instance: Agent situation.
        scoring_rule: Scoring rule S(r_j, varpi) paid at settlement.
        epsilon: Report floor.
    """
    scale = 1.0 / instance.varpi

    def objective(z: np.ndarray) -> float:
        report = clip_report(softmax(z), epsilon)
        return -scale * agent_expected_utility(
            report,
            instance.belief,
            instance.varpi,
            instance.p_table,
            scoring_rule,
            rewards=instance.rewards,
        )

    result = minimize(
        objective,
        np.zeros(instance.belief.m),
        jac="3-point",
        method="BFGS",
        options={"gtol": 1e-8, "maxiter": 1000},
    )
    return clip_report(softmax(result.x), epsilon)


@dataclass(frozen=True)
class OptimumResult:
    instances: int
    max_error: float

    @property
    def passed(self) -> bool:
        return self.max_error <= OPTIMUM_TOLERANCE


def truthful_optimum_suite(samples: int = 1000, seed: int = 0) -> OptimumResult:
    """L-infinity distance between the numerical optimum and the belief, worst case."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        instance = random_instance(rng)
        best = maximize_agent_utility(instance)
        worst = max(worst, float(np.max(np.abs(best.probs - instance.belief.probs))))
    logger.info(f"Truthful optimum: max |r* - b| = {worst:.3g} over {samples} instances")
    return OptimumResult(samples, worst)


@dataclass(frozen=True)
class StrategyGridResult:
    points: int
    violations: int
    ties: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


def belief_grid(step: float = 0.05, m: int = 3) -> List[TypeDistribution]:
    """Every belief whose components are multiples of step."""
    units = int(round(1.0 / step))
    return [
        normalize(np.array(c, dtype=np.float64))
        for c in product(range(units + 1), repeat=m)
        if sum(c) == units
    ]


def strategy_grid_check(
    step: float = 0.05,
    varpi: float = 1.0,
    manipulation: str = "swap_top_two",
    epsilon: float = EPSILON_REPORT,
) -> StrategyGridResult:
    """Truthful EU must be at least the malicious EU on every grid belief."""
    rng = np.random.default_rng(0)
    violations = ties = points = 0
    for belief in belief_grid(step):
        instance = IncentiveInstance(belief, varpi, np.full((2, belief.m), 0.5), 0.0)
        truthful = expected_utility(instance, make_report(belief, Strategy.TRUTHFUL, rng, epsilon))
        malicious = expected_utility(
            instance, make_report(belief, Strategy.MALICIOUS, rng, epsilon, manipulation)
        )
        points += 1
        if malicious > truthful + PROPERNESS_SLACK:
            violations += 1
        elif abs(malicious - truthful) <= PROPERNESS_SLACK:
            ties += 1
    return StrategyGridResult(points, violations, ties)


@dataclass(frozen=True)
class OracleResult:
    samples: int
    max_difference: float
    max_reward_shift: float
    max_varpi_shift: float

    @property
    def passed(self) -> bool:
        return (
            self.max_difference <= ORACLE_TOLERANCE
            and self.max_reward_shift <= INVARIANCE_TOLERANCE
            and self.max_varpi_shift <= INVARIANCE_TOLERANCE
        )


def random_report_set(
    rng: np.random.Generator,
    epsilon: float = EPSILON_REPORT,
) -> Tuple[List[Report], dict]:
    """2..10 clipped reports with weights in (0, 1] and a reward history each."""
    n = int(rng.integers(2, 11))
    m = int(rng.integers(2, 6))
    reports, ledgers = [], {}
    for i in range(n):
        agent_id = f"agent-{i}"
        reports.append(
            Report(
                agent_id=agent_id,
                time=1,
                values=clip_report(rng.dirichlet(np.ones(m)), epsilon),
                expert_weight=1.0 - rng.random(),
            )
        )
        ledgers[agent_id] = _random_ledger(rng)
    return reports, ledgers


def _random_ledger(rng: np.random.Generator) -> List[LedgerEntry]:
    count = int(rng.integers(1, 4))
    return [LedgerEntry(time=t, weight=1.0 - rng.random(), reward=float(rng.uniform(-5.0, 5.0))) for t in range(1, count + 1)]


def oracle_check(samples: int = 1000, seed: int = 0) -> OracleResult:
    """
    Compare the log-space pool with the literal evaluation, then re-run the
    literal evaluation under fresh rewards and a fresh varpi.
    """
    rng = np.random.default_rng(seed)
    worst = reward_shift = varpi_shift = 0.0
    for _ in range(samples):
        reports, ledgers = random_report_set(rng)
        varpi = float(rng.uniform(0.5, 10.0))
        pooled = aggregate_beliefs(reports).probs
        literal = aggregate_beliefs_literal(reports, ledgers, varpi).probs
        worst = max(worst, float(np.max(np.abs(pooled - literal))))

        shuffled = {agent_id: _random_ledger(rng) for agent_id in ledgers}
        rewarded = aggregate_beliefs_literal(reports, shuffled, varpi).probs
        reward_shift = max(reward_shift, float(np.max(np.abs(rewarded - literal))))

        rescaled = aggregate_beliefs_literal(reports, ledgers, float(rng.uniform(0.5, 10.0))).probs
        varpi_shift = max(varpi_shift, float(np.max(np.abs(rescaled - literal))))
    result = OracleResult(samples, worst, reward_shift, varpi_shift)
    logger.info(
        f"Aggregation oracle: max difference {worst:.3g}, reward shift {reward_shift:.3g}, "
        f"varpi shift {varpi_shift:.3g}"
    )
    return result
