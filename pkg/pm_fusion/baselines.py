"""
baselines.py

The two comparison fusion methods:

- Two-level Dempster-Shafer classification: evidence first fixes the metal
  content level of the object, then mine/friendly evidence conditioned on
  that level is combined and turned into a distribution with the pignistic
  transform.
- A Bayesian information filter (DDF) that multiplies the running
  posterior by every report it receives.

Mass functions are stored as {frozenset(focal element): mass}.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import reduce
from typing import Dict, FrozenSet, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, ConflictError, DegenerateInputError
from .model import TypeDistribution, normalize
from .sensor_agent import EPSILON_REPORT
from .signal_model import confusion_matrix

logger = logging.getLogger(__name__)

MASS_TOLERANCE = 1e-9
CONFLICT_FLOOR = 1e-12

Focal = FrozenSet[str]


class MassFunction:
    """
    Basic belief assignment over a finite frame of discernment.

    Attributes:
        frame (Tuple[str, ...]): Elements of the frame, in display order.
        masses (Dict[FrozenSet[str], float]): Nonzero masses of the focal elements.
    """

    __slots__ = ("frame", "masses")

    def __init__(self, frame: Sequence[str], masses: Mapping[Iterable[str], float]) -> None:
        self.frame: Tuple[str, ...] = tuple(frame)
        if len(set(self.frame)) != len(self.frame) or not self.frame:
            raise ValueError(f"Invalid frame {self.frame}")
        universe = frozenset(self.frame)
        cleaned: Dict[Focal, float] = {}
        for focal, mass in masses.items():
            key = frozenset([focal]) if isinstance(focal, str) else frozenset(focal)
            if not key <= universe:
                raise ValueError(f"Focal element {sorted(key)} is not a subset of the frame")
            if mass < 0 or mass > 1 + MASS_TOLERANCE:
                raise ValueError(f"Mass {mass} of {sorted(key)} is outside [0, 1]")
            if not key and mass > 0:
                raise ValueError("The empty set cannot carry mass")
            if mass > 0:
                cleaned[key] = cleaned.get(key, 0.0) + float(mass)
        total = sum(cleaned.values())
        if abs(total - 1.0) > MASS_TOLERANCE:
            raise ValueError(f"Masses must sum to 1, got {total!r}")
        self.masses = cleaned

    @classmethod
    def vacuous(cls, frame: Sequence[str]) -> "MassFunction":
        """Total ignorance: all mass on the whole frame."""
        return cls(frame, {frozenset(frame): 1.0})

    @classmethod
    def simple_support(cls, frame: Sequence[str], focal: Iterable[str], support: float) -> "MassFunction":
        """support on one focal element, the rest on the frame."""
        if not 0.0 <= support <= 1.0:
            raise ValueError(f"support must lie in [0, 1], got {support}")
        whole = frozenset(frame)
        focal_set = frozenset(focal)
        if focal_set == whole:
            return cls.vacuous(frame)
        return cls(frame, {focal_set: support, whole: 1.0 - support})

    def mass_of(self, focal: Iterable[str]) -> float:
        return self.masses.get(frozenset(focal), 0.0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MassFunction):
            return NotImplemented
        return set(self.frame) == set(other.frame) and self.masses == other.masses

    def __repr__(self) -> str:
        body = ", ".join(
            "{" + ",".join(sorted(k)) + f"}}: {v:.6g}"
            for k, v in sorted(self.masses.items(), key=lambda kv: (len(kv[0]), sorted(kv[0])))
        )
        return f"MassFunction({body})"


def ds_combine(m1: MassFunction, m2: MassFunction) -> MassFunction:
    """
    Dempster's rule: conjunctive combination with the conflict normalized away.

    Raises:
        ValueError: If the frames differ.
        ConflictError: If the two sources are in total conflict.
    """
    if set(m1.frame) != set(m2.frame):
        raise ValueError(f"Cannot combine mass functions over {m1.frame} and {m2.frame}")
    combined: Dict[Focal, float] = {}
    conflict = 0.0
    for a, mass_a in m1.masses.items():
        for b, mass_b in m2.masses.items():
            c = a & b
            if c:
                combined[c] = combined.get(c, 0.0) + mass_a * mass_b
            else:
                conflict += mass_a * mass_b
    norm = 1.0 - conflict
    if norm <= CONFLICT_FLOOR:
        raise ConflictError(f"Total conflict between sources (K={conflict:.6g})")
    total = sum(combined.values())
    return MassFunction(m1.frame, {k: v / total for k, v in combined.items()})


def pignistic(mass: MassFunction) -> np.ndarray:
    """Betting probability: every focal mass split evenly over its elements."""
    index = {name: i for i, name in enumerate(mass.frame)}
    probs = np.zeros(len(mass.frame))
    for focal, value in mass.masses.items():
        share = value / len(focal)
        for name in focal:
            probs[index[name]] += share
    return probs


def _combine_all(masses: Sequence[MassFunction]) -> MassFunction:
    return reduce(ds_combine, masses)


def ds_classify(
    level_masses: Sequence[MassFunction],
    type_masses: Mapping[str, Sequence[MassFunction]],
    type_frame: Sequence[str],
) -> TypeDistribution:
    """
    Two-level classification.

    Args:
        level_masses: Level-1 evidence over the metal content levels.
        type_masses: Per metal level, level-2 evidence over the type frame.
        type_frame: Object types, in TypeDistribution order.

    Returns:
        Pignistic distribution of the combined level-2 evidence of the most
        plausible metal level. Vacuous when there is no evidence.

    Raises:
        ConflictError: If either level is in total conflict.
        ConfigurationError: If the chosen level has no level-2 entry.
    """
    if not level_masses:
        return normalize(pignistic(MassFunction.vacuous(type_frame)))
    level = _combine_all(level_masses)
    betting = pignistic(level)
    chosen = level.frame[int(np.argmax(betting))]
    logger.debug(f"Metal level chosen: {chosen} ({betting.max():.4g})")
    if chosen not in type_masses:
        raise ConfigurationError(f"No type evidence for metal level '{chosen}'")
    evidence = list(type_masses[chosen]) or [MassFunction.vacuous(type_frame)]
    combined = _combine_all(evidence)
    if set(combined.frame) != set(type_frame):
        raise ValueError("Level-2 evidence must be over the type frame")
    probs = pignistic(combined)
    order = [combined.frame.index(name) for name in type_frame]
    return normalize(probs[order])


@dataclass(frozen=True)
class DSLayout:
    """
    Frames and groupings used to derive mass functions from reports.

    Attributes:
        type_frame (Tuple[str, ...]): Object types.
        level_frame (Tuple[str, ...]): Metal content levels.
        metal_feature (int): Position of the metal content feature in a signal.
        mine_types (FrozenSet[str]): Types counted as mines.
        friendly_by_level (Dict[str, FrozenSet[str]]): Friendly types consistent
            with each metal level.
        reliability (float): Base reliability multiplied into every expert weight.
    """

    type_frame: Tuple[str, ...]
    level_frame: Tuple[str, ...]
    metal_feature: int
    mine_types: FrozenSet[str]
    friendly_by_level: Dict[str, FrozenSet[str]] = field(default_factory=dict)
    reliability: float = 0.9

    def __post_init__(self) -> None:
        types = set(self.type_frame)
        if not self.mine_types or not self.mine_types <= types:
            raise ConfigurationError(f"mine_types {sorted(self.mine_types)} must be a nonempty subset of {self.type_frame}")
        for level in self.level_frame:
            friendly = self.friendly_by_level.get(level)
            if not friendly:
                raise ConfigurationError(f"No friendly types configured for metal level '{level}'")
            if not friendly <= types - self.mine_types:
                raise ConfigurationError(f"Friendly types for '{level}' must be non-mine types")
        if not 0.0 <= self.reliability <= 1.0:
            raise ConfigurationError(f"reliability must lie in [0, 1], got {self.reliability}")


def ds_masses_for_report(
    values: TypeDistribution,
    metal_reading: int,
    metal_noise: float,
    expert_weight: float,
    layout: DSLayout,
) -> Tuple[MassFunction, Dict[str, MassFunction]]:
    """
    Evidence carried by one report.

    Level 1 puts s * P(reading | level) on every singleton level; level 2
    puts s * r(mine types) on the mine set and s * r(friendly types) on the
    friendly set of that level. The remaining 1 - s goes to the frame, with
    s = expert_weight * reliability.
    """
    support = expert_weight * layout.reliability
    row = confusion_matrix(len(layout.level_frame), metal_noise)[:, metal_reading]
    row = row / row.sum()
    level_mass: Dict[Focal, float] = {frozenset(layout.level_frame): 1.0 - support}
    for name, p in zip(layout.level_frame, row):
        if p > 0:
            level_mass[frozenset([name])] = support * p
    level_fn = MassFunction(layout.level_frame, level_mass)

    probs = dict(zip(layout.type_frame, values))
    mine_share = sum(probs[t] for t in layout.mine_types)
    friendly_share = 1.0 - mine_share
    whole = frozenset(layout.type_frame)
    type_fns: Dict[str, MassFunction] = {}
    for level in layout.level_frame:
        type_fns[level] = MassFunction(
            layout.type_frame,
            {
                frozenset(layout.mine_types): support * mine_share,
                frozenset(layout.friendly_by_level[level]): support * friendly_share,
                whole: 1.0 - support,
            },
        )
    return level_fn, type_fns


@dataclass(frozen=True)
class FilterState:
    """
    Running state of the information filter.

    Attributes:
        posterior (TypeDistribution): Current posterior over types.
        updates_applied (int): Number of likelihoods folded in.
    """

    posterior: TypeDistribution
    updates_applied: int = 0


def ddf_update(state: FilterState, likelihood: TypeDistribution) -> FilterState:
    """
    Multiply the posterior by a likelihood and renormalize.

    Raises:
        ValueError: If the likelihood has a component below EPSILON_REPORT.
        DegenerateInputError: If the product vanishes.
    """
    lik = np.asarray(likelihood, dtype=np.float64)
    if lik.shape != (state.posterior.m,):
        raise ValueError(f"Likelihood has {lik.size} components, posterior has {state.posterior.m}")
    if np.any(lik < EPSILON_REPORT * (1.0 - 1e-9)):
        raise ValueError(f"Likelihood components must be at least {EPSILON_REPORT}: {lik.tolist()}")
    product = np.asarray(state.posterior) * lik
    if product.sum() <= 0.0:
        raise DegenerateInputError("Posterior and likelihood have disjoint support")
    return FilterState(posterior=normalize(product), updates_applied=state.updates_applied + 1)


def ddf_run(state: FilterState, likelihoods: Iterable[TypeDistribution]) -> FilterState:
    """Apply several likelihoods in order."""
    for likelihood in likelihoods:
        state = ddf_update(state, likelihood)
    return state


def flatten_type_evidence(per_report: Sequence[Dict[str, MassFunction]]) -> Dict[str, List[MassFunction]]:
    """Regroup per-report level-2 masses by metal level."""
    grouped: Dict[str, List[MassFunction]] = {}
    for entry in per_report:
        for level, mass in entry.items():
            grouped.setdefault(level, []).append(mass)
    return grouped
