"""
ds_fusion.py

Two-level Dempster-Shafer baseline. Each report yields evidence about the
object's metal content level and, per level, about mine versus friendly
types; see pm_fusion.baselines.ds_masses_for_report.

Options (the `baselines.ds` block of the scenario):
    reliability: base reliability multiplied into every expert weight.
    metal_feature: name of the metal content feature.
    mine_types: type names counted as mines.
    friendly_by_level: metal level -> friendly type names.
"""

import logging
from typing import Optional, Sequence

from pm_fusion.baselines import DSLayout, ds_classify, ds_masses_for_report, flatten_type_evidence
from pm_fusion.errors import ConfigurationError, ConflictError
from pm_fusion.fusion_base import FusionMethod, Submission
from pm_fusion.model import DomainLayout, TypeDistribution

logger = logging.getLogger(__name__)


class DempsterShaferFusion(FusionMethod):
    """
    Two-level belief-function classifier.

    Combines the evidence of the reports of the current step. On total
    conflict the previous output is kept.
    """

    def __init__(self, config=None) -> None:
        super().__init__(config)
        self.ds_layout: Optional[DSLayout] = None
        self.last: Optional[TypeDistribution] = None

    def get_method_name(self) -> str:
        return "ds"

    def get_description(self) -> str:
        return "Two-level Dempster-Shafer combination (metal level, then mine/friendly) with pignistic output"

    def reset(self, layout: DomainLayout, prior: TypeDistribution) -> None:
        self.layout = layout
        self.last = prior
        feature = self.get_option("metal_feature", layout.feature_names[0])
        try:
            metal_index = layout.feature_index(feature)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None
        levels = layout.feature_levels[metal_index]
        friendly = self.get_option("friendly_by_level", {})
        self.ds_layout = DSLayout(
            type_frame=layout.type_names,
            level_frame=levels,
            metal_feature=metal_index,
            mine_types=frozenset(self.get_option("mine_types", [layout.type_names[0]])),
            friendly_by_level={level: frozenset(friendly.get(level, ())) for level in levels},
            reliability=float(self.get_option("reliability", 0.9)),
        )

    def aggregate(self, time: int, submissions: Sequence[Submission]) -> TypeDistribution:
        if self.ds_layout is None:
            raise RuntimeError("reset() must be called before aggregate()")
        if not submissions:
            return self.last
        index = self.ds_layout.metal_feature
        level_masses, type_masses = [], []
        for s in submissions:
            level_fn, type_fns = ds_masses_for_report(
                s.report.values,
                s.signal.values[index],
                s.sensor.noise_level[index],
                s.report.expert_weight,
                self.ds_layout,
            )
            level_masses.append(level_fn)
            type_masses.append(type_fns)
        try:
            self.last = ds_classify(level_masses, flatten_type_evidence(type_masses), self.ds_layout.type_frame)
        except ConflictError as exc:
            logger.warning(f"DS step {time}: {exc}; keeping the previous output")
        return self.last
