"""
market.py

The market maker: decision scoring rule, payment function, weighted-average
payment, belief aggregation and end-of-window settlement.

Aggregation is the normalized weighted geometric mean of the step's reports,
computed in log space. Inverting the weighted-average payment literally gives
the same distribution because the reward sums and the decision weight cancel;
aggregate_beliefs_literal keeps that evaluation around as an oracle.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from .decision_maker import DecisionRecord
from .errors import ConfigurationError, MarketStateError
from .model import TypeDistribution, normalize, uniform
from .sensor_agent import (
    EPSILON_REPORT,
    AgentState,
    Manipulation,
    Report,
    ScoringRule,
    ValueFunctionParams,
)

logger = logging.getLogger(__name__)

EPSILON_WEIGHT = 1e-9

PTable = Mapping[Tuple[int, int], float]


class LedgerEntry(NamedTuple):
    """One instantaneous reward together with the expert weight of its report."""

    time: int
    weight: float
    reward: float


def decision_weight(
    decisions: Sequence[DecisionRecord],
    type_index: int,
    p_table: PTable,
    utilities: Sequence[float],
) -> float:
    """
    varpi(d[1:t], theta_j) = sum_i P(d_i | theta_j) * u_j, floored at EPSILON_WEIGHT.

    Args:
        decisions: Decisions taken so far.
        type_index: 1-based type index j.
        p_table: (decision id, type index) -> P(d | theta).
        utilities: Decision-maker utility of each type, in type order.

    Raises:
        ConfigurationError: If a decision has no table entry for the type.
    """
    if not 1 <= type_index <= len(utilities):
        raise ValueError(f"type_index must lie in 1..{len(utilities)}, got {type_index}")
    u_j = float(utilities[type_index - 1])
    terms = []
    for record in decisions:
        try:
            terms.append(p_table[(record.decision_id, type_index)] * u_j)
        except KeyError:
            raise ConfigurationError(
                f"No P(d|theta) entry for decision {record.decision_id}, type {type_index}"
            ) from None
    return max(EPSILON_WEIGHT, math.fsum(terms))


def score_report(r_j: float, varpi: float) -> float:
    """
    Decision scoring rule S = varpi * ln(r_j).

    Raises:
        ValueError: If varpi is negative or r_j lies outside [EPSILON_REPORT, 1].
    """
    if varpi < 0 or not math.isfinite(varpi):
        raise ValueError(f"varpi must be finite and nonnegative, got {varpi}")
    if not EPSILON_REPORT * (1.0 - 1e-9) <= r_j <= 1.0 + 1e-9:
        raise ValueError(f"Report value {r_j} lies outside [{EPSILON_REPORT}, 1]; clip reports before scoring")
    return varpi * math.log(min(r_j, 1.0))


def payment(rewards: Sequence[float], final_score: float) -> float:
    """Total payment: sum of instantaneous rewards plus the final score."""
    return math.fsum(list(rewards) + [final_score])


def _weighted_rewards(reports: Sequence[Report], ledgers: Mapping[str, Sequence[LedgerEntry]]) -> float:
    agents = {report.agent_id for report in reports}
    return math.fsum(
        entry.weight * entry.reward
        for agent_id in sorted(agents)
        for entry in ledgers.get(agent_id, ())
    )


def average_payment(
    reports: Sequence[Report],
    ledgers: Mapping[str, Sequence[LedgerEntry]],
    varpi: float,
    type_index: int,
) -> float:
    """
    Weighted-average payment of the agents reporting at this step, for type j.

    sum_k sum_a w^{a,k} rho^{a,k} + varpi * sum_a w^{a,t} ln(r_j^{a,t})
    """
    score_term = math.fsum(
        report.expert_weight * math.log(report.values[type_index - 1]) for report in reports
    )
    return _weighted_rewards(reports, ledgers) + varpi * score_term


def aggregate_beliefs(reports: Sequence[Report]) -> TypeDistribution:
    """
    Aggregate one step's reports: B_j proportional to prod_a (r_j^a)^{w^a}.

    Raises:
        ValueError: If there are no reports or their lengths differ.
    """
    if not reports:
        raise ValueError("Cannot aggregate an empty report set")
    m = reports[0].values.m
    if any(report.values.m != m for report in reports):
        raise ValueError("All reports of a step must cover the same types")
    weights = np.array([report.expert_weight for report in reports])
    log_reports = np.log(np.vstack([np.asarray(report.values) for report in reports]))
    pooled = weights @ log_reports
    return normalize(np.exp(pooled - logsumexp(pooled)))


def aggregate_beliefs_literal(
    reports: Sequence[Report],
    ledgers: Mapping[str, Sequence[LedgerEntry]],
    varpi: Union[float, Sequence[float]],
) -> TypeDistribution:
    """
    Aggregate by inverting the weighted-average payment term by term.

    For every type j: build the average payment, subtract the weighted reward
    sum, divide by varpi_j, exponentiate; then normalize. Overflows for large
    arguments, unlike aggregate_beliefs.
    """
    if not reports:
        raise ValueError("Cannot aggregate an empty report set")
    m = reports[0].values.m
    varpis = [float(varpi)] * m if np.isscalar(varpi) else [float(v) for v in varpi]
    if len(varpis) != m or any(v <= 0 for v in varpis):
        raise ValueError("varpi must be positive, one value or one per type")
    rewards = _weighted_rewards(reports, ledgers)
    raw = [
        math.exp((average_payment(reports, ledgers, varpis[j - 1], j) - rewards) / varpis[j - 1])
        for j in range(1, m + 1)
    ]
    return normalize(raw)


@dataclass(frozen=True)
class SettlementRecord:
    """
    Per-agent settlement breakdown.

    Attributes:
        agent_id (str): Settled agent.
        reports (int): Number of reports the agent made.
        rewards_sum (float): Sum of its instantaneous rewards.
        varpi (float): Decision weight at the revealed type.
        report_at_truth (float): Final report's value at the revealed type.
        score (float): Final decision score.
        total (float): Payment, rewards_sum + score.
        sensor_type (str): Sensor family, when known.
        strategy (str): Disposition, when known.
    """

    agent_id: str
    reports: int
    rewards_sum: float
    varpi: float
    report_at_truth: float
    score: float
    total: float
    sensor_type: str = ""
    strategy: str = ""


@dataclass(eq=False)
class MarketContext:
    """What an agent sees of the market when it picks a strategy."""

    varpi: float
    p_table: np.ndarray
    time: int
    window: int
    value_params: ValueFunctionParams
    report_cost: float
    rng: np.random.Generator
    epsilon: float = EPSILON_REPORT
    manipulation: Union[str, Manipulation] = "swap_top_two"
    scoring_rule: ScoringRule = score_report


@dataclass
class MarketState:
    """
    Per-object ledger kept by the market maker.

    Attributes:
        object_id (str): Object being classified.
        m (int): Number of object types.
        window (int): Time window T of the object.
        reports_by_step (List[List[Report]]): Reports of step t at index t - 1.
        aggregate_trajectory (List[TypeDistribution]): B^t at index t - 1.
        decisions_so_far (List[DecisionRecord]): d[1:t].
        rewards_ledger (Dict[str, List[LedgerEntry]]): Rewards per agent, one per report.
        closed (bool): True once the window has closed.
    """

    object_id: str
    m: int
    window: int
    reports_by_step: List[List[Report]] = field(default_factory=list)
    aggregate_trajectory: List[TypeDistribution] = field(default_factory=list)
    decisions_so_far: List[DecisionRecord] = field(default_factory=list)
    rewards_ledger: Dict[str, List[LedgerEntry]] = field(default_factory=dict)
    closed: bool = False

    @property
    def time(self) -> int:
        """Last recorded step (0 before the first report)."""
        return len(self.reports_by_step)

    def current_belief(self) -> TypeDistribution:
        """Latest aggregate, or the uniform B^0 before any step."""
        return self.aggregate_trajectory[-1] if self.aggregate_trajectory else uniform(self.m)

    def _require_open(self) -> None:
        if self.closed:
            raise MarketStateError(f"Market for object {self.object_id} is closed")

    def record_step(self, time: int, reports: Sequence[Report], aggregate: TypeDistribution) -> None:
        """Append the reports and the aggregate of the next step."""
        self._require_open()
        if time != self.time + 1 or time > self.window:
            raise MarketStateError(f"Expected step {self.time + 1} within window {self.window}, got {time}")
        if aggregate.m != self.m:
            raise ValueError(f"Aggregate has {aggregate.m} components, market expects {self.m}")
        agents = [report.agent_id for report in reports]
        if len(set(agents)) != len(agents):
            raise ValueError(f"An agent reported twice at step {time}: {agents}")
        if any(report.time != time for report in reports):
            raise ValueError(f"Report time stamps do not match step {time}")
        self.reports_by_step.append(list(reports))
        self.aggregate_trajectory.append(aggregate)
        logger.debug(f"Object {self.object_id} step {time}: {len(reports)} reports, B={aggregate!r}")

    def record_reward(self, agent_id: str, time: int, weight: float, reward: float) -> None:
        """Book the instantaneous reward of a report recorded at this step."""
        self._require_open()
        if not 1 <= time <= self.time or all(r.agent_id != agent_id for r in self.reports_by_step[time - 1]):
            raise MarketStateError(f"Agent {agent_id} has no report at step {time}")
        entries = self.rewards_ledger.setdefault(agent_id, [])
        if any(entry.time == time for entry in entries):
            raise MarketStateError(f"Reward for agent {agent_id} at step {time} already recorded")
        entries.append(LedgerEntry(time=time, weight=float(weight), reward=float(reward)))

    def record_decision(self, record: DecisionRecord) -> None:
        self._require_open()
        self.decisions_so_far.append(record)

    def close(self) -> None:
        """Close the window; every report must have its reward booked."""
        for agent_id, count in self.report_counts().items():
            booked = len(self.rewards_ledger.get(agent_id, ()))
            if booked != count:
                raise MarketStateError(f"Agent {agent_id} has {count} reports but {booked} rewards")
        self.closed = True
        logger.debug(f"Market for object {self.object_id} closed after {self.time} steps")

    def report_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for step in self.reports_by_step:
            for report in step:
                counts[report.agent_id] = counts.get(report.agent_id, 0) + 1
        return counts

    def last_report(self, agent_id: str) -> Optional[Report]:
        for step in reversed(self.reports_by_step):
            for report in step:
                if report.agent_id == agent_id:
                    return report
        return None

    def varpi_estimate(self, p_table: PTable, utilities: Sequence[float]) -> float:
        """Decision weight expected under the current aggregate."""
        belief = self.current_belief()
        expected = math.fsum(
            belief[j - 1] * decision_weight(self.decisions_so_far, j, p_table, utilities)
            for j in range(1, self.m + 1)
        )
        return max(EPSILON_WEIGHT, expected)


def settle_market(
    state: MarketState,
    true_type: int,
    p_table: PTable,
    utilities: Sequence[float],
    agents: Optional[Mapping[str, AgentState]] = None,
) -> Dict[str, SettlementRecord]:
    """
    Pay every agent that reported: its rewards plus the score of its final report.

    Args:
        state: Closed market of the object.
        true_type: Revealed 1-based type index.
        p_table: (decision id, type index) -> P(d | theta).
        utilities: Decision-maker utilities.
        agents: Optional agent states, used to label the breakdown.

    Raises:
        MarketStateError: If the window is still open.
    """
    if not state.closed:
        raise MarketStateError(f"Cannot settle object {state.object_id} before its window closes")
    varpi = decision_weight(state.decisions_so_far, true_type, p_table, utilities)
    settlement: Dict[str, SettlementRecord] = {}
    for agent_id, count in sorted(state.report_counts().items()):
        final = state.last_report(agent_id)
        r_j = final.values[true_type - 1]
        rewards = [entry.reward for entry in state.rewards_ledger.get(agent_id, ())]
        score = score_report(r_j, varpi)
        agent = agents.get(agent_id) if agents else None
        settlement[agent_id] = SettlementRecord(
            agent_id=agent_id,
            reports=count,
            rewards_sum=math.fsum(rewards),
            varpi=varpi,
            report_at_truth=r_j,
            score=score,
            total=payment(rewards, score),
            sensor_type=agent.sensor_type.value if agent else "",
            strategy=agent.strategy.value if agent else "",
        )
    logger.info(f"Settled object {state.object_id}: {len(settlement)} agents, varpi={varpi:.6g}")
    return settlement
