"""
signal_model.py

Generative model for sensor signals and the knowledge tables agents use to
interpret them:

- sample_signal draws a noisy reading of an object's features.
- ConditionalTypeTable maps every signal combination to P(Theta | g). It is
  built once, at scenario load time, from per-type likelihoods with a
  naive-Bayes factorization across features.
- EnvironmentState and expert_weight give the reliability weight an expert
  attaches to a report, depending on sensor type and ground conditions.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigurationError
from .model import (
    DomainLayout,
    ObjectInstance,
    SensorType,
    SensorTypeSpec,
    TypeDistribution,
    normalize,
)

logger = logging.getLogger(__name__)

LIKELIHOOD_TOLERANCE = 1e-6


class Condition(str, Enum):
    """Ground and weather conditions that change how far a sensor is trusted."""

    CLEAR = "clear"
    RAIN = "rain"
    HIGH_METAL_SOIL = "high_metal_soil"

    @classmethod
    def parse(cls, value: Union[str, "Condition"]) -> "Condition":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigurationError(
                f"Unknown environment condition '{value}'. Expected one of {[c.value for c in cls]}"
            ) from None


DEFAULT_WEIGHT_EXCEPTIONS: Dict[Tuple[SensorType, Condition], float] = {
    (SensorType.IR, Condition.RAIN): 0.3,
    (SensorType.MD, Condition.HIGH_METAL_SOIL): 0.4,
}


def default_weight_table(
    overrides: Optional[Mapping[Tuple[SensorType, Condition], float]] = None,
) -> Dict[Tuple[SensorType, Condition], float]:
    """Full (sensor type, condition) -> weight table: 1.0 except the known degradations."""
    table = {(s, c): 1.0 for s in SensorType for c in Condition}
    table.update(DEFAULT_WEIGHT_EXCEPTIONS)
    if overrides:
        table.update(overrides)
    return table


@dataclass(frozen=True)
class Signal:
    """
    One sensor reading of an object.

    Attributes:
        values (Tuple[int, ...]): Level index read for every feature.
        sensor_type (SensorType): Family of the sensor that produced it.
        time (int): Time step of the reading.
    """

    values: Tuple[int, ...]
    sensor_type: SensorType
    time: int


@dataclass(frozen=True)
class EnvironmentState:
    """
    Current conditions and the expert's weight table.

    Attributes:
        condition (Condition): Prevailing condition at the object.
        weights (Mapping): (sensor type, condition) -> weight in (0, 1].
    """

    condition: Condition = Condition.CLEAR
    weights: Mapping[Tuple[SensorType, Condition], float] = field(default_factory=default_weight_table)

    def __post_init__(self) -> None:
        object.__setattr__(self, "condition", Condition.parse(self.condition))
        for key, weight in self.weights.items():
            if not 0.0 < weight <= 1.0:
                raise ConfigurationError(f"Expert weight for {key} must lie in (0, 1], got {weight}")


def expert_weight(sensor_type: SensorType, env: EnvironmentState, time: int) -> float:
    """
    Weight an expert assigns to a report from this sensor type at this time.

    The time argument is accepted for table lookups that vary within an
    episode; the shipped tables do not.

    Raises:
        ConfigurationError: If the (sensor type, condition) entry is missing.
    """
    key = (SensorType.parse(sensor_type), env.condition)
    try:
        return float(env.weights[key])
    except KeyError:
        raise ConfigurationError(
            f"No expert weight for sensor {key[0].value} under condition {key[1].value}"
        ) from None


def confusion_matrix(levels: int, noise: float) -> np.ndarray:
    """
    P(reading | true level) for one feature: 1 - noise on the diagonal, the
    remaining mass spread evenly over the other levels. Rows index the true level.
    """
    if levels < 2:
        raise ValueError("A feature needs at least two levels")
    off = noise / (levels - 1)
    matrix = np.full((levels, levels), off)
    np.fill_diagonal(matrix, 1.0 - noise)
    return matrix


def build_likelihoods(
    profiles: Sequence[np.ndarray],
    noise: Sequence[float],
) -> Tuple[np.ndarray, ...]:
    """
    Reading likelihoods P(reading | type) for one sensor family.

    Args:
        profiles: Per feature, an (m x L) array of P(true level | type).
        noise: Per feature noise level of the sensor family.

    Returns:
        Per feature, an (m x L) array whose rows sum to 1.
    """
    if len(profiles) != len(noise):
        raise ConfigurationError(
            f"{len(profiles)} feature profiles but {len(noise)} noise levels"
        )
    return tuple(
        np.asarray(profile, dtype=np.float64) @ confusion_matrix(np.shape(profile)[1], eta)
        for profile, eta in zip(profiles, noise)
    )


@dataclass(frozen=True)
class ConditionalTypeTable:
    """
    Lookup table g -> P(Theta | g) covering the whole signal space G.

    Attributes:
        prior (TypeDistribution): Prior over types used to build the table.
        entries (Mapping): Signal value tuple -> posterior.
        level_counts (Tuple[int, ...]): Number of levels of every feature.
    """

    prior: TypeDistribution
    entries: Mapping[Tuple[int, ...], TypeDistribution]
    level_counts: Tuple[int, ...]

    @classmethod
    def from_likelihoods(
        cls,
        prior: TypeDistribution,
        likelihoods: Sequence[np.ndarray],
    ) -> "ConditionalTypeTable":
        """
        Enumerate G and store the naive-Bayes posterior of every combination.

        Combinations that are impossible under every type keep the prior so
        that the table stays total.

        Raises:
            ConfigurationError: If a likelihood table has the wrong shape or a
                row that does not sum to 1.
        """
        m = prior.m
        tables = []
        for i, lik in enumerate(likelihoods):
            arr = np.asarray(lik, dtype=np.float64)
            if arr.ndim != 2 or arr.shape[0] != m:
                raise ConfigurationError(f"Likelihood table {i} must have {m} rows, got shape {arr.shape}")
            if np.any(arr < 0) or not np.allclose(arr.sum(axis=1), 1.0, atol=LIKELIHOOD_TOLERANCE):
                raise ConfigurationError(f"Likelihood table {i} rows must be distributions over readings")
            tables.append(arr)

        level_counts = tuple(t.shape[1] for t in tables)
        prior_arr = np.asarray(prior)
        entries: Dict[Tuple[int, ...], TypeDistribution] = {}
        for combo in itertools.product(*(range(n) for n in level_counts)):
            unnormalized = prior_arr.copy()
            for table, reading in zip(tables, combo):
                unnormalized = unnormalized * table[:, reading]
            if unnormalized.sum() <= 0.0:
                logger.debug(f"Signal {combo} is unreachable; storing the prior")
                entries[combo] = prior
            else:
                entries[combo] = normalize(unnormalized)
        logger.debug(f"Built conditional type table with {len(entries)} entries")
        return cls(prior=prior, entries=entries, level_counts=level_counts)

    def __len__(self) -> int:
        return len(self.entries)


def posterior_given_signal(signal: Signal, table: ConditionalTypeTable) -> TypeDistribution:
    """
    P(Theta | g) for a signal.

    Raises:
        ConfigurationError: If the signal combination is not in the table.
    """
    try:
        return table.entries[tuple(signal.values)]
    except KeyError:
        raise ConfigurationError(
            f"Signal {tuple(signal.values)} from {signal.sensor_type.value} is not covered by the table"
        ) from None


def sample_signal(
    obj: ObjectInstance,
    sensor: SensorTypeSpec,
    env: EnvironmentState,
    rng: np.random.Generator,
    level_counts: Sequence[int],
    time: int = 0,
) -> Signal:
    """
    Draw one reading of the object's features.

    Each feature reads its true level with probability 1 - noise_level and a
    uniformly drawn other level otherwise. Ground conditions affect only the
    expert weight of the resulting report, never the reading itself.

    Args:
        obj: Object being observed.
        sensor: Sensor family of the observing agent.
        env: Current environment (kept for symmetry with expert_weight).
        rng: Seeded random source owned by the episode.
        level_counts: Number of levels of every feature.
        time: Time step stamped on the signal.
    """
    if len(sensor.noise_level) != len(obj.features):
        raise ConfigurationError(
            f"{sensor.name.value} has {len(sensor.noise_level)} noise levels for {len(obj.features)} features"
        )
    readings = []
    for true_level, noise, levels in zip(obj.features, sensor.noise_level, level_counts):
        corrupted = rng.random() < noise
        other = int(rng.integers(levels - 1))
        if corrupted:
            readings.append(other if other < true_level else other + 1)
        else:
            readings.append(int(true_level))
    return Signal(values=tuple(readings), sensor_type=sensor.name, time=time)


def draw_object(
    object_id: str,
    type_index: int,
    profiles: Sequence[np.ndarray],
    rng: np.random.Generator,
    layout: Optional[DomainLayout] = None,
) -> ObjectInstance:
    """Sample ground-truth feature levels for an object of the given (1-based) type."""
    features = []
    for profile in profiles:
        row = np.asarray(profile, dtype=np.float64)[type_index - 1]
        features.append(int(rng.choice(row.size, p=row / row.sum())))
    obj = ObjectInstance(id=object_id, true_type=type_index, features=tuple(features))
    if layout is not None:
        obj.check_layout(layout)
    return obj
