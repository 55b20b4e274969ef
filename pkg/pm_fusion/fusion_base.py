"""
fusion_base.py

Abstract base class for all fusion methods.

A fusion method turns the reports submitted at one time step into the
distribution the decision maker acts on. The prediction market and the two
baselines (Dempster-Shafer, DDF information filter) are plug-ins of this
class, so the episode loop stays the same whichever method runs: only a new
subclass and, optionally, a `baselines.<name>` block in the scenario YAML
are needed to add another one.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

from .model import DomainLayout, SensorTypeSpec, TypeDistribution
from .sensor_agent import Report, Strategy
from .signal_model import Signal

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Submission:
    """
    Everything a fusion method may look at for one report.

    Attributes:
        report (Report): The report as the market maker receives it.
        signal (Signal): The reading behind it (baselines derive evidence from it).
        sensor (SensorTypeSpec): Sensor family of the reporting agent.
        strategy (Strategy): Strategy the agent used for this report.
    """

    report: Report
    signal: Signal
    sensor: SensorTypeSpec
    strategy: Strategy = Strategy.TRUTHFUL


class FusionMethod(ABC):
    """
    Abstract base class for aggregation methods.

    Subclasses must implement:

        - get_method_name():
              Short canonical identifier (e.g. "pm", "ds").

        - get_description():
              One-line human-readable description.

        - reset():
              Prepare per-object state before an episode starts.

        - aggregate():
              Fuse one step's submissions into a TypeDistribution.

    Instances carry per-episode state; the registry hands out a fresh one
    on every lookup.
    """

    def __init__(self, config: Optional[Dict[str, Any]] = None) -> None:
        """
        Initialize the method with an optional configuration.

        Args:
            config:
                Method options, typically the `baselines.<name>` block of the
                scenario YAML. If None, an empty dict is used.
        """
        self.config: Dict[str, Any] = config or {}
        self.layout: Optional[DomainLayout] = None
        logger.debug("Initialized %s fusion method.", self.get_method_name())

    @abstractmethod
    def get_method_name(self) -> str:
        """
        Return the canonical name of the method.

        Returns:
            str: Method name (e.g. "pm", "ds", "ddf").
        """
        raise NotImplementedError

    @abstractmethod
    def get_description(self) -> str:
        raise NotImplementedError

    @abstractmethod
    def reset(self, layout: DomainLayout, prior: TypeDistribution) -> None:
        """
        Forget everything about the previous object.

        Args:
            layout: Type and feature names of the scenario.
            prior: Distribution before any report (B^0).
        """
        raise NotImplementedError

    @abstractmethod
    def aggregate(self, time: int, submissions: Sequence[Submission]) -> TypeDistribution:
        """
        Fuse the submissions of one step.

        Args:
            time: Current step.
            submissions: Reports of every agent that reported at this step.

        Returns:
            TypeDistribution: Aggregate the decision maker acts on.
        """
        raise NotImplementedError

    def settles_market(self) -> bool:
        """Whether agents are paid through market settlement under this method."""
        return False

    def run_step(self, time: int, submissions: Sequence[Submission]) -> TypeDistribution:
        """
        Call aggregate() and check its output.

        Raises:
            ValueError: If the result does not cover the layout's types.
            Exception: Any error raised by aggregate() is logged and re-raised.
        """
        try:
            result = self.aggregate(time, submissions)
            if self.layout is not None and result.m != self.layout.m:
                error_msg = f"{self.get_method_name()} returned {result.m} components, expected {self.layout.m}"
                logger.error(error_msg)
                raise ValueError(error_msg)
            return result
        except Exception as exc:
            logger.error("Error during %s aggregation at step %d: %s", self.get_method_name(), time, exc)
            raise

    def get_option(self, key: str, default: Any = None) -> Any:
        """
        Retrieve a configuration value specific to this method.

        Args:
            key: Option name (e.g. "reliability").
            default: Value to return if key is not present in self.config.
        """
        return self.config.get(key, default)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(method={self.get_method_name()})"
