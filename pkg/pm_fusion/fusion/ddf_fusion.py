"""
ddf_fusion.py

Bayesian information filter baseline. The posterior persists across the
steps of an episode and every report is folded in as a likelihood.
"""

import logging
from typing import Optional, Sequence

import numpy as np

from pm_fusion.baselines import FilterState, ddf_update
from pm_fusion.fusion_base import FusionMethod, Submission
from pm_fusion.model import DomainLayout, TypeDistribution, normalize
from pm_fusion.sensor_agent import clip_report

logger = logging.getLogger(__name__)


class InformationFilterFusion(FusionMethod):
    """
    DDF information filter.

    Options:
        use_expert_weights (bool): Temper every likelihood by its expert
            weight, r ** w, before the update. Default True.
    """

    def __init__(self, config=None) -> None:
        super().__init__(config)
        self.state: Optional[FilterState] = None

    def get_method_name(self) -> str:
        return "ddf"

    def get_description(self) -> str:
        return "Recursive Bayesian information filter over all reports received"

    def reset(self, layout: DomainLayout, prior: TypeDistribution) -> None:
        self.layout = layout
        self.state = FilterState(posterior=prior)

    def _likelihood(self, submission: Submission) -> TypeDistribution:
        values = submission.report.values
        if not self.get_option("use_expert_weights", True):
            return values
        tempered = normalize(np.power(np.asarray(values), submission.report.expert_weight))
        return clip_report(tempered)

    def aggregate(self, time: int, submissions: Sequence[Submission]) -> TypeDistribution:
        if self.state is None:
            raise RuntimeError("reset() must be called before aggregate()")
        for submission in submissions:
            self.state = ddf_update(self.state, self._likelihood(submission))
        logger.debug(f"DDF step {time}: {self.state.updates_applied} updates applied")
        return self.state.posterior
