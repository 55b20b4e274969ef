"""
market_fusion.py

The prediction market as a fusion method: aggregation is the market
maker's log-pool of the step's reports, and agents are paid by settlement.
"""

import logging
from typing import Sequence

from pm_fusion.fusion_base import FusionMethod, Submission
from pm_fusion.market import aggregate_beliefs
from pm_fusion.model import DomainLayout, TypeDistribution

logger = logging.getLogger(__name__)


class MarketFusion(FusionMethod):
    """
    Prediction-market aggregation.
    """

    def get_method_name(self) -> str:
        return "pm"

    def get_description(self) -> str:
        return "Prediction market: expert-weighted logarithmic pool of the step's reports"

    def reset(self, layout: DomainLayout, prior: TypeDistribution) -> None:
        self.layout = layout

    def aggregate(self, time: int, submissions: Sequence[Submission]) -> TypeDistribution:
        return aggregate_beliefs([s.report for s in submissions])

    def settles_market(self) -> bool:
        return True
