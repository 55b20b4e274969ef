"""
model.py

Core domain types shared by every pm_fusion module:

- TypeDistribution: a validated probability vector over the m object types.
  Beliefs, reports, posteriors and aggregates all use it.
- DomainLayout: names of the object types and of the categorical features.
- ObjectInstance: a detected object with its ground-truth type and features.
- SensorTypeSpec: per-sensor-type noise, report cost and fleet size.

Type indices are 1-based at the API surface (type 1 is the first entry of
DomainLayout.type_names); arrays are 0-based internally.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterator, Sequence, Tuple, Union

import numpy as np

from .errors import DegenerateInputError

SIMPLEX_TOLERANCE = 1e-9

DEFAULT_FLEET: Dict[str, int] = {"MD": 5, "IR": 3, "GPR": 2}


class SensorType(str, Enum):
    """Sensor families available to the decision maker, cheapest first."""

    MD = "MD"
    IR = "IR"
    GPR = "GPR"

    @classmethod
    def parse(cls, value: Union[str, "SensorType"]) -> "SensorType":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(
                f"Unknown sensor type '{value}'. Expected one of {[s.value for s in cls]}"
            ) from None


class TypeDistribution:
    """
    Immutable probability vector over the object types.

    The vector is validated on construction: every component lies in [0, 1]
    and the components sum to 1 within SIMPLEX_TOLERANCE. Operations that
    produce a distribution always go through this constructor.

    Attributes:
        probs (np.ndarray): Read-only float64 array of length m.
    """

    __slots__ = ("_probs",)

    def __init__(self, probs: Union[Sequence[float], np.ndarray, "TypeDistribution"]) -> None:
        arr = np.array(probs, dtype=np.float64).reshape(-1)
        if arr.size == 0:
            raise ValueError("A TypeDistribution needs at least one component")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"TypeDistribution components must be finite, got {arr.tolist()}")
        if np.any(arr < 0.0) or np.any(arr > 1.0 + SIMPLEX_TOLERANCE):
            raise ValueError(f"TypeDistribution components must lie in [0, 1], got {arr.tolist()}")
        total = float(arr.sum())
        if abs(total - 1.0) > SIMPLEX_TOLERANCE:
            raise ValueError(f"TypeDistribution components must sum to 1, got sum={total!r}")
        arr.setflags(write=False)
        self._probs = arr

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    @property
    def m(self) -> int:
        return int(self._probs.size)

    def argmax(self) -> int:
        """1-based index of the most probable type (lowest index on ties)."""
        return int(np.argmax(self._probs)) + 1

    def max(self) -> float:
        return float(self._probs.max())

    def allclose(self, other: Union["TypeDistribution", Sequence[float]], atol: float = 1e-9) -> bool:
        other_arr = np.asarray(other, dtype=np.float64)
        return other_arr.shape == self._probs.shape and bool(
            np.allclose(self._probs, other_arr, rtol=0.0, atol=atol)
        )

    def tolist(self) -> list:
        return self._probs.tolist()

    def __array__(self, dtype=None, copy=None) -> np.ndarray:
        if dtype is None:
            return self._probs.copy() if copy else self._probs
        return self._probs.astype(dtype)

    def __len__(self) -> int:
        return self.m

    def __iter__(self) -> Iterator[float]:
        return iter(float(x) for x in self._probs)

    def __getitem__(self, index: int) -> float:
        return float(self._probs[index])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TypeDistribution):
            return NotImplemented
        return bool(np.array_equal(self._probs, other._probs))

    def __hash__(self) -> int:
        return hash(self._probs.tobytes())

    def __repr__(self) -> str:
        return "TypeDistribution(" + ", ".join(f"{x:.6g}" for x in self._probs) + ")"


def vec_of_type(type_index: int, m: int) -> TypeDistribution:
    """
    One-hot distribution for a known object type.

    Args:
        type_index: 1-based type index.
        m: Number of object types.

    Raises:
        ValueError: If type_index is outside 1..m.
    """
    if m < 1:
        raise ValueError(f"m must be positive, got {m}")
    if not 1 <= type_index <= m:
        raise ValueError(f"type_index must lie in 1..{m}, got {type_index}")
    probs = np.zeros(m)
    probs[type_index - 1] = 1.0
    return TypeDistribution(probs)


def uniform(m: int) -> TypeDistribution:
    """Uniform distribution over m types; the market's belief before any report."""
    if m < 1:
        raise ValueError(f"m must be positive, got {m}")
    return TypeDistribution(np.full(m, 1.0 / m))


def normalize(raw: Union[Sequence[float], np.ndarray, TypeDistribution]) -> TypeDistribution:
    """
    Scale a nonnegative vector onto the probability simplex.

    Raises:
        DegenerateInputError: If the vector has a negative or non-finite
            component, or sums to zero.
    """
    arr = np.asarray(raw, dtype=np.float64).reshape(-1)
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        raise DegenerateInputError(f"Cannot normalize {arr.tolist()}")
    if np.any(arr < 0.0):
        raise DegenerateInputError(f"Cannot normalize a vector with negative components: {arr.tolist()}")
    total = arr.sum()
    if total <= 0.0:
        raise DegenerateInputError("Cannot normalize an all-zero vector")
    return TypeDistribution(arr / total)


@dataclass(frozen=True)
class DomainLayout:
    """
    Names of the object types (Theta) and of the categorical features (Phi).

    Attributes:
        type_names (Tuple[str, ...]): Object type labels, in index order.
        feature_names (Tuple[str, ...]): Feature labels, in signal order.
        feature_levels (Tuple[Tuple[str, ...], ...]): Level labels per feature.
    """

    type_names: Tuple[str, ...]
    feature_names: Tuple[str, ...]
    feature_levels: Tuple[Tuple[str, ...], ...]

    def __post_init__(self) -> None:
        if len(self.type_names) < 2:
            raise ValueError("At least two object types are required")
        if len(set(self.type_names)) != len(self.type_names):
            raise ValueError(f"Duplicate object type names: {self.type_names}")
        if len(self.feature_names) != len(self.feature_levels):
            raise ValueError("Every feature needs a list of levels")
        for name, levels in zip(self.feature_names, self.feature_levels):
            if len(levels) < 2:
                raise ValueError(f"Feature '{name}' needs at least two levels")

    @property
    def m(self) -> int:
        return len(self.type_names)

    @property
    def f(self) -> int:
        return len(self.feature_names)

    @property
    def level_counts(self) -> Tuple[int, ...]:
        return tuple(len(levels) for levels in self.feature_levels)

    def type_index(self, name: str) -> int:
        """1-based index of a type label."""
        try:
            return self.type_names.index(name) + 1
        except ValueError:
            raise ValueError(f"Unknown object type '{name}'. Known: {list(self.type_names)}") from None

    def type_name(self, type_index: int) -> str:
        if not 1 <= type_index <= self.m:
            raise ValueError(f"type_index must lie in 1..{self.m}, got {type_index}")
        return self.type_names[type_index - 1]

    def feature_index(self, name: str) -> int:
        """0-based position of a feature in the signal vector."""
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise ValueError(f"Unknown feature '{name}'. Known: {list(self.feature_names)}") from None


@dataclass(frozen=True)
class ObjectInstance:
    """
    A detected object.

    Attributes:
        id (str): Object identifier.
        true_type (int): 1-based ground-truth type index.
        features (Tuple[int, ...]): True level index of every feature.
    """

    id: str
    true_type: int
    features: Tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", tuple(int(v) for v in self.features))
        if self.true_type < 1:
            raise ValueError(f"true_type is 1-based, got {self.true_type}")
        if any(v < 0 for v in self.features):
            raise ValueError(f"Feature levels must be nonnegative, got {self.features}")

    def check_layout(self, layout: DomainLayout) -> None:
        """Raise ValueError unless the object fits the layout's m and feature domains."""
        if self.true_type > layout.m:
            raise ValueError(f"true_type {self.true_type} exceeds m={layout.m}")
        if len(self.features) != layout.f:
            raise ValueError(f"Object has {len(self.features)} features, layout expects {layout.f}")
        for value, count, name in zip(self.features, layout.level_counts, layout.feature_names):
            if value >= count:
                raise ValueError(f"Feature '{name}' level {value} outside 0..{count - 1}")

    def truth(self, m: int) -> TypeDistribution:
        return vec_of_type(self.true_type, m)


@dataclass(frozen=True)
class SensorTypeSpec:
    """
    Attributes of one sensor family.

    Attributes:
        name (SensorType): Sensor family.
        noise_level (Tuple[float, ...]): Per-feature probability that a reading
            is replaced by a uniformly drawn other level.
        report_cost (float): Cost C^a charged for every report.
        count_available (int): Size of this family in the fleet.
    """

    name: SensorType
    noise_level: Tuple[float, ...]
    report_cost: float
    count_available: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "name", SensorType.parse(self.name))
        object.__setattr__(self, "noise_level", tuple(float(x) for x in self.noise_level))
        if any(not 0.0 <= x <= 1.0 for x in self.noise_level):
            raise ValueError(f"{self.name.value}: noise levels must lie in [0, 1], got {self.noise_level}")
        if self.report_cost < 0:
            raise ValueError(f"{self.name.value}: report_cost must be nonnegative, got {self.report_cost}")
        if self.count_available < 0:
            raise ValueError(f"{self.name.value}: count_available must be nonnegative")
