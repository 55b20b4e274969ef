"""
sensor_agent.py

Agent-side state and behavior for the sensors taking part in the market:
belief updates, report construction, strategy selection and reward
accounting.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import (
    TYPE_CHECKING,
    Callable,
    Dict,
    Iterable,
    List,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np

from .model import SensorType, SensorTypeSpec, TypeDistribution

if TYPE_CHECKING:
    from .market import MarketContext

logger = logging.getLogger(__name__)

EPSILON_REPORT = 1e-6

ScoringRule = Callable[[float, float], float]
Manipulation = Callable[[np.ndarray, np.random.Generator], np.ndarray]


class Strategy(str, Enum):
    TRUTHFUL = "truthful"
    MALICIOUS = "malicious"

    @classmethod
    def parse(cls, value: Union[str, "Strategy"]) -> "Strategy":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"Unknown strategy '{value}'. Expected one of {[s.value for s in cls]}") from None


@dataclass(frozen=True)
class ValueFunctionParams:
    """
    Parameters of the per-report value function V(n).

    Attributes:
        nu (float): Constant value paid for each of the first n_threshold reports.
        n_threshold (int): Last report count that still earns the full value.
        n_max (int): Report count at which the value reaches zero.
    """

    nu: float = 5.0
    n_threshold: int = 5
    n_max: int = 20

    def __post_init__(self) -> None:
        if self.nu <= 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not 0 < self.n_threshold < self.n_max:
            raise ValueError(
                f"Expected 0 < n_threshold < n_max, got n_threshold={self.n_threshold}, n_max={self.n_max}"
            )


@dataclass(frozen=True)
class Report:
    """
    A report submitted to the market maker.

    Attributes:
        agent_id (str): Reporting agent.
        time (int): Time step of the report.
        values (TypeDistribution): Reported distribution, already clipped.
        expert_weight (float): Reliability weight attached by the expert.
    """

    agent_id: str
    time: int
    values: TypeDistribution
    expert_weight: float

    def __post_init__(self) -> None:
        if not isinstance(self.values, TypeDistribution):
            object.__setattr__(self, "values", TypeDistribution(self.values))
        if self.expert_weight < 0 or not math.isfinite(self.expert_weight):
            raise ValueError(f"expert_weight must be finite and nonnegative, got {self.expert_weight}")


@dataclass
class AgentState:
    """
    Mutable state of one sensor agent during an episode.

    Attributes:
        id (str): Agent identifier, e.g. "GPR-1".
        sensor_type (SensorType): Sensor family.
        belief (TypeDistribution): Current belief b^{a,t}.
        strategy (Strategy): Disposition. A malicious agent always manipulates;
            a truthful one chooses its strategy by expected utility.
        reports_made (int): Reports submitted so far.
        cumulative_reward (float): Sum of instantaneous rewards so far.
        w_bel (float): Weight of the agent's own signal in its belief update.
        last_reading (Optional[Tuple[int, ...]]): Previous signal values.
        rewards (List[float]): Instantaneous reward of every report, in order.
    """

    id: str
    sensor_type: SensorType
    belief: TypeDistribution
    strategy: Strategy = Strategy.TRUTHFUL
    reports_made: int = 0
    cumulative_reward: float = 0.0
    w_bel: float = 0.5
    last_reading: Optional[Tuple[int, ...]] = None
    rewards: List[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.sensor_type = SensorType.parse(self.sensor_type)
        self.strategy = Strategy.parse(self.strategy)
        if not 0.0 <= self.w_bel <= 1.0:
            raise ValueError(f"w_bel must lie in [0, 1], got {self.w_bel}")

    @property
    def is_malicious(self) -> bool:
        return self.strategy is Strategy.MALICIOUS

    def observe(self, signal_posterior: TypeDistribution, market_belief: TypeDistribution) -> TypeDistribution:
        """Fold a new signal posterior and the latest aggregate into the belief."""
        self.belief = update_belief(signal_posterior, market_belief, self.w_bel)
        return self.belief

    def record_report(self, reward: float, reading: Optional[Tuple[int, ...]] = None) -> None:
        """Book one submitted report and its instantaneous reward."""
        self.reports_made += 1
        self.rewards.append(float(reward))
        self.cumulative_reward = math.fsum(self.rewards)
        if reading is not None:
            self.last_reading = tuple(reading)


def update_belief(
    signal_posterior: TypeDistribution,
    market_belief: TypeDistribution,
    w_bel: float,
) -> TypeDistribution:
    """
    Convex combination of the signal posterior and the market aggregate.

    Returns:
        w_bel * P(Theta | g) + (1 - w_bel) * B, as a TypeDistribution.
    """
    if not 0.0 <= w_bel <= 1.0:
        raise ValueError(f"w_bel must lie in [0, 1], got {w_bel}")
    if signal_posterior.m != market_belief.m:
        raise ValueError(f"Length mismatch: {signal_posterior.m} vs {market_belief.m}")
    if w_bel == 1.0:
        return signal_posterior
    if w_bel == 0.0:
        return market_belief
    mixed = w_bel * np.asarray(signal_posterior) + (1.0 - w_bel) * np.asarray(market_belief)
    return TypeDistribution(mixed / mixed.sum())


def report_value(n: int, params: ValueFunctionParams) -> float:
    """V(n): nu up to n_threshold, then linearly down to zero at n_max."""
    if n < 1:
        raise ValueError(f"n counts reports and must be at least 1, got {n}")
    if n <= params.n_threshold:
        return float(params.nu)
    return params.nu * (n - params.n_max) / (params.n_threshold - params.n_max)


def report_cost(agent: AgentState, spec: SensorTypeSpec) -> float:
    """Per-report cost C^a of the agent's sensor family."""
    if agent.sensor_type is not spec.name:
        raise ValueError(f"Agent {agent.id} is a {agent.sensor_type.value}, got a {spec.name.value} spec")
    return float(spec.report_cost)


def instantaneous_reward(value: float, cost: float) -> float:
    """Reward R = V(n) - C^a of one report; negative once V(n) falls below the cost."""
    return value - cost


def clip_report(values: Union[TypeDistribution, Sequence[float], np.ndarray], epsilon: float = EPSILON_REPORT) -> TypeDistribution:
    """
    Floor every component at epsilon while keeping the vector on the simplex.

    Components below the floor are set to epsilon exactly and the others are
    rescaled to absorb the difference.
    """
    arr = np.asarray(values, dtype=np.float64).reshape(-1)
    if epsilon * arr.size >= 1.0:
        raise ValueError(f"epsilon={epsilon} is too large for {arr.size} components")
    floored = arr < epsilon
    while True:
        free_mass = arr[~floored].sum()
        clipped = np.where(floored, epsilon, arr * (1.0 - epsilon * floored.sum()) / free_mass)
        newly = ~floored & (clipped < epsilon)
        if not newly.any():
            return TypeDistribution(clipped)
        floored |= newly


def swap_top_two(belief: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Exchange the two largest components (lowest index first on ties)."""
    out = np.array(belief, dtype=np.float64)
    order = np.argsort(-out, kind="stable")
    out[order[0]], out[order[1]] = out[order[1]], out[order[0]]
    return out


def invert(belief: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Reverse the ranking: the most likely type gets the smallest value and so on."""
    arr = np.asarray(belief, dtype=np.float64)
    order = np.argsort(-arr, kind="stable")
    out = np.empty_like(arr)
    out[order] = np.sort(arr)
    return out


def shuffle(belief: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Randomly permute the components."""
    return rng.permutation(np.asarray(belief, dtype=np.float64))


MANIPULATIONS: Dict[str, Manipulation] = {
    "swap_top_two": swap_top_two,
    "invert": invert,
    "shuffle": shuffle,
}


def get_manipulation(name: str) -> Manipulation:
    try:
        return MANIPULATIONS[name]
    except KeyError:
        raise ValueError(f"Unknown manipulation '{name}'. Available: {sorted(MANIPULATIONS)}") from None


def make_report(
    belief: TypeDistribution,
    strategy: Union[Strategy, str],
    rng: np.random.Generator,
    epsilon: float = EPSILON_REPORT,
    manipulation: Union[str, Manipulation] = "swap_top_two",
) -> TypeDistribution:
    """
    Turn a belief into a report.

    Truthful reports repeat the belief; malicious reports pass it through the
    manipulation model first. Both are clipped to epsilon and renormalized.
    """
    if Strategy.parse(strategy) is Strategy.TRUTHFUL:
        return clip_report(belief, epsilon)
    manipulate = get_manipulation(manipulation) if isinstance(manipulation, str) else manipulation
    return clip_report(manipulate(np.asarray(belief), rng), epsilon)


def agent_expected_utility(
    report: TypeDistribution,
    belief: TypeDistribution,
    varpi: float,
    p_table: np.ndarray,
    scoring_rule: ScoringRule,
    rewards: float = 0.0,
    future_rewards: float = 0.0,
) -> float:
    """
    Expected payment of a report under the agent's own belief.

    EU = sum_i sum_j P(d_i | theta_j) * b_j * (rewards + future + S(r_j, varpi)).

    Args:
        report: Candidate report r.
        belief: Agent belief b, used as the probability of each outcome.
        varpi: Decision weight fed to the scoring rule.
        p_table: (h x m) array of P(d_i | theta_j).
        scoring_rule: Callable S(r_j, varpi).
        rewards: Instantaneous rewards already earned.
        future_rewards: Rewards the agent expects for the rest of the window.
    """
    table = np.asarray(p_table, dtype=np.float64)
    if table.ndim != 2 or table.shape[1] != belief.m or report.m != belief.m:
        raise ValueError(f"p_table of shape {table.shape} does not fit m={belief.m}")
    outcome_mass = table.sum(axis=0) * np.asarray(belief)
    payoff = np.array([rewards + future_rewards + scoring_rule(r_j, varpi) for r_j in report])
    return float(np.dot(outcome_mass, payoff))


def future_reward_estimate(agent: AgentState, context: "MarketContext", cost: float) -> float:
    """Rewards from replicating the current report for the rest of the window."""
    remaining = max(context.window - context.time, 0)
    first = agent.reports_made + 2
    return math.fsum(
        report_value(n, context.value_params) - cost for n in range(first, first + remaining)
    )


def choose_report(
    agent: AgentState,
    candidate_strategies: Iterable[Union[Strategy, str]],
    market_context: "MarketContext",
) -> Tuple[Strategy, TypeDistribution]:
    """
    Pick the candidate strategy with the highest expected utility.

    Each candidate's report is simulated through the payment function with
    the agent's belief as the outcome distribution. Truthful wins ties.

    Returns:
        The winning strategy and the exact report that was evaluated for it,
        so a randomized manipulation is submitted as it was scored.
    """
    candidates = sorted(
        {Strategy.parse(s) for s in candidate_strategies},
        key=lambda s: s is not Strategy.TRUTHFUL,
    )
    if not candidates:
        raise ValueError("At least one candidate strategy is required")

    cost = market_context.report_cost
    current = report_value(agent.reports_made + 1, market_context.value_params) - cost
    rewards = agent.cumulative_reward + current
    future = future_reward_estimate(agent, market_context, cost)

    best, best_report, best_eu = candidates[0], None, -math.inf
    for strategy in candidates:
        report = make_report(
            agent.belief,
            strategy,
            market_context.rng,
            market_context.epsilon,
            market_context.manipulation,
        )
        eu = agent_expected_utility(
            report,
            agent.belief,
            market_context.varpi,
            market_context.p_table,
            market_context.scoring_rule,
            rewards=rewards,
            future_rewards=future,
        )
        if eu > best_eu + 1e-12:
            best, best_report, best_eu = strategy, report, eu
    logger.debug(f"Agent {agent.id} chose {best.value} (EU={best_eu:.6g})")
    return best, best_report


def choose_strategy(
    agent: AgentState,
    candidate_strategies: Iterable[Union[Strategy, str]],
    market_context: "MarketContext",
) -> Strategy:
    """Strategy half of choose_report."""
    return choose_report(agent, candidate_strategies, market_context)[0]
