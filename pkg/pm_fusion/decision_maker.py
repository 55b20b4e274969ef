"""
decision_maker.py

Expected-utility decisions about which sensors to deploy next, plus the
fleet bookkeeping that turns a decision into deployed sensors.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError
from .model import DEFAULT_FLEET, SensorType, TypeDistribution

logger = logging.getLogger(__name__)

MAX_SENSORS_PER_DECISION = 3
COLUMN_TOLERANCE = 1e-6


def _deployment(counts: Mapping) -> Dict[SensorType, int]:
    return {SensorType.parse(k): int(v) for k, v in counts.items() if int(v) != 0}


def deployment_label(counts: Mapping[SensorType, int]) -> str:
    """Human-readable label such as '1MD+1GPR', or 'none'."""
    parts = [f"{counts[s]}{s.value}" for s in SensorType if counts.get(s, 0) > 0]
    return "+".join(parts) if parts else "none"


@dataclass(frozen=True)
class DecisionSpec:
    """
    One candidate deployment.

    Attributes:
        id (int): Decision identifier; lower ids win EU ties.
        deployment (Dict[SensorType, int]): Sensors requested per family.
        label (str): Display name, derived from the deployment when empty.
    """

    id: int
    deployment: Dict[SensorType, int] = field(default_factory=dict)
    label: str = ""

    def __post_init__(self) -> None:
        counts = _deployment(self.deployment)
        if any(not 0 <= c <= MAX_SENSORS_PER_DECISION for c in counts.values()):
            raise ValueError(f"Decision {self.id}: counts must lie in 0..{MAX_SENSORS_PER_DECISION}")
        if sum(counts.values()) > MAX_SENSORS_PER_DECISION:
            raise ValueError(f"Decision {self.id} requests more than {MAX_SENSORS_PER_DECISION} sensors")
        object.__setattr__(self, "deployment", counts)
        if not self.label:
            object.__setattr__(self, "label", deployment_label(counts))

    @property
    def total(self) -> int:
        return sum(self.deployment.values())


def parse_deployment_label(label: str) -> Dict[SensorType, int]:
    """Inverse of deployment_label: '1MD+1GPR' -> {MD: 1, GPR: 1}."""
    text = str(label).strip()
    if text.lower() in ("none", "nothing", ""):
        return {}
    counts: Dict[SensorType, int] = {}
    for part in text.split("+"):
        digits = len(part) - len(part.lstrip("0123456789"))
        if digits == 0:
            raise ConfigurationError(f"Cannot parse deployment '{label}': '{part}' has no count")
        sensor = SensorType.parse(part[digits:])
        counts[sensor] = counts.get(sensor, 0) + int(part[:digits])
    return counts


def standard_decision_set() -> Tuple[DecisionSpec, ...]:
    """
    The default 14 decisions: deploy nothing, 1..3 sensors of a single family,
    and the four mixed single-sensor combinations.
    """
    deployments: List[Dict[SensorType, int]] = [{}]
    for sensor in SensorType:
        deployments.extend({sensor: k} for k in range(1, 4))
    md, ir, gpr = SensorType.MD, SensorType.IR, SensorType.GPR
    deployments.extend([{md: 1, ir: 1}, {md: 1, gpr: 1}, {ir: 1, gpr: 1}, {md: 1, ir: 1, gpr: 1}])
    return tuple(DecisionSpec(id=i, deployment=d) for i, d in enumerate(deployments))


@dataclass(frozen=True)
class DecisionModel:
    """
    Domain knowledge of the decision maker.

    Attributes:
        p_table (Mapping): (decision id, 1-based type index) -> P(d | theta).
        utilities (Tuple[float, ...]): Utility u_j of each type.
    """

    p_table: Mapping[Tuple[int, int], float]
    utilities: Tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "utilities", tuple(float(u) for u in self.utilities))
        if not all(math.isfinite(u) for u in self.utilities):
            raise ConfigurationError(f"Utilities must be finite, got {self.utilities}")
        for key, p in self.p_table.items():
            if not 0.0 <= p <= 1.0:
                raise ConfigurationError(f"P(d|theta) entry {key} = {p} is not a probability")

    @property
    def m(self) -> int:
        return len(self.utilities)

    def probability(self, decision_id: int, type_index: int) -> float:
        try:
            return float(self.p_table[(decision_id, type_index)])
        except KeyError:
            raise ConfigurationError(
                f"No P(d|theta) entry for decision {decision_id}, type {type_index}"
            ) from None

    def matrix(self, decisions: Sequence[DecisionSpec]) -> np.ndarray:
        """(h x m) array of P(d_i | theta_j) in decision order."""
        return np.array(
            [[self.probability(d.id, j) for j in range(1, self.m + 1)] for d in decisions]
        )

    def validate_for(self, decisions: Sequence[DecisionSpec]) -> None:
        """
        Check coverage of every (decision, type) pair and that each column
        P(. | theta_j) is a distribution over the decision set.

        Raises:
            ConfigurationError: On a missing entry or a column not summing to 1.
        """
        sums = self.matrix(decisions).sum(axis=0)
        for j, total in enumerate(sums, start=1):
            if abs(total - 1.0) > COLUMN_TOLERANCE:
                raise ConfigurationError(f"P(d|theta_{j}) sums to {total:.6g} over the decision set, expected 1")


@dataclass(frozen=True)
class DecisionRecord:
    """
    One action of the decision maker.

    Attributes:
        time (int): Step at which the decision was taken.
        decision_id (int): Chosen decision.
        expected_utility (float): EU of the chosen decision.
        requested (Dict[SensorType, int]): Sensors the decision asked for.
        deployed (Dict[SensorType, int]): Sensors actually deployed.
        shortfall (Dict[SensorType, int]): Requested but unavailable sensors.
    """

    time: int
    decision_id: int
    expected_utility: float
    requested: Dict[SensorType, int] = field(default_factory=dict)
    deployed: Dict[SensorType, int] = field(default_factory=dict)
    shortfall: Dict[SensorType, int] = field(default_factory=dict)
    label: str = ""


@dataclass(frozen=True)
class Fleet:
    """Sensors still available for deployment, per family."""

    available: Dict[SensorType, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        counts = {s: int(self.available.get(s, self.available.get(s.value, 0))) for s in SensorType}
        if any(c < 0 for c in counts.values()):
            raise ValueError(f"Fleet counts must be nonnegative, got {counts}")
        object.__setattr__(self, "available", counts)

    @classmethod
    def default(cls) -> "Fleet":
        return cls({SensorType(k): v for k, v in DEFAULT_FLEET.items()})

    def can_supply(self, deployment: Mapping[SensorType, int]) -> bool:
        return all(self.available[s] >= c for s, c in deployment.items())

    def deploy(self, requested: Mapping[SensorType, int]) -> Tuple["Fleet", Dict[SensorType, int], Dict[SensorType, int]]:
        """Take min(requested, available) of every family; returns (fleet, deployed, shortfall)."""
        remaining = dict(self.available)
        deployed: Dict[SensorType, int] = {}
        shortfall: Dict[SensorType, int] = {}
        for sensor, count in requested.items():
            take = min(count, remaining[sensor])
            if take:
                deployed[sensor] = take
                remaining[sensor] -= take
            if count > take:
                shortfall[sensor] = count - take
        return Fleet(remaining), deployed, shortfall


def expected_utility(decision: DecisionSpec, belief: TypeDistribution, model: DecisionModel) -> float:
    """EU(d, B) = sum_j P(d | theta_j) * u_j * B_j."""
    if belief.m != model.m:
        raise ValueError(f"Belief has {belief.m} components, model has {model.m} utilities")
    return math.fsum(
        model.probability(decision.id, j) * model.utilities[j - 1] * belief[j - 1]
        for j in range(1, model.m + 1)
    )


def decide(
    belief: TypeDistribution,
    decisions: Sequence[DecisionSpec],
    model: DecisionModel,
    time: int = 0,
) -> DecisionRecord:
    """
    Choose the decision with maximal expected utility; lowest id wins ties.

    Raises:
        ValueError: If the decision set is empty.
    """
    if not decisions:
        raise ValueError("The decision set is empty")
    best, best_eu = None, -math.inf
    for decision in sorted(decisions, key=lambda d: d.id):
        eu = expected_utility(decision, belief, model)
        if best is None or eu > best_eu:
            best, best_eu = decision, eu
    logger.debug(f"Step {time}: decided {best.label} (EU={best_eu:.6g})")
    return DecisionRecord(
        time=time,
        decision_id=best.id,
        expected_utility=best_eu,
        requested=dict(best.deployment),
        label=best.label,
    )


def apply_decision(record: DecisionRecord, fleet: Fleet) -> Tuple[Fleet, DecisionRecord]:
    """
    Deploy what the fleet can supply. Shortfalls are recorded, not fatal.

    Returns:
        The updated fleet and the record with deployed and shortfall filled in.
    """
    new_fleet, deployed, shortfall = fleet.deploy(record.requested)
    if shortfall:
        logger.warning(
            f"Step {record.time}: decision {record.label} short of "
            + ", ".join(f"{c} {s.value}" for s, c in shortfall.items())
        )
    return new_fleet, replace(record, deployed=deployed, shortfall=shortfall)


def feasible_decisions(decisions: Sequence[DecisionSpec], fleet: Fleet) -> List[DecisionSpec]:
    """Decisions whose full request the fleet can still satisfy."""
    return [d for d in decisions if fleet.can_supply(d.deployment)]
