"""
pm_fusion package initializer.

Prediction-market aggregation of sensor beliefs for buried-object
classification, with Dempster-Shafer and information-filter baselines, the
experiment harness and the incentive checks. Exposes the core types and
operations along with the fusion method registry.
"""

from .errors import (
    PMFusionError, DegenerateInputError, ConfigurationError, ConflictError, MarketStateError
)
from .model import (
    SensorType, TypeDistribution, DomainLayout, ObjectInstance, SensorTypeSpec,
    vec_of_type, uniform, normalize
)
from .signal_model import (
    Condition, Signal, EnvironmentState, ConditionalTypeTable,
    expert_weight, posterior_given_signal, sample_signal, build_likelihoods, draw_object
)
from .sensor_agent import (
    Strategy, ValueFunctionParams, Report, AgentState,
    update_belief, report_value, report_cost, instantaneous_reward, clip_report,
    make_report, agent_expected_utility, choose_strategy, choose_report
)
from .market import (
    MarketState, MarketContext, SettlementRecord,
    decision_weight, score_report, payment, aggregate_beliefs, aggregate_beliefs_literal,
    settle_market
)
from .decision_maker import (
    DecisionSpec, DecisionModel, DecisionRecord, Fleet,
    standard_decision_set, expected_utility, decide, apply_decision, feasible_decisions
)
from .baselines import (
    MassFunction, FilterState, ds_combine, ds_classify, pignistic, ddf_update
)
from .metrics import MetricSample, rmse, nmse_db, kl_divergence, evaluate
from .scenario import ScenarioConfig, load_scenario
from .utils import to_dict, to_json

# Import registry and default registration
from .fusion_base import FusionMethod, Submission
from .fusion_registry import (
    FusionRegistry, get_global_registry, register_default_methods
)

from .harness import EpisodeRecord, ExperimentResult, run_episode, run_experiment, run_sweep
from .reporting import emit_results, emit_sweep

# Register built-in fusion methods by default
register_default_methods()

__all__ = [
    # Errors
    "PMFusionError", "DegenerateInputError", "ConfigurationError", "ConflictError", "MarketStateError",
    # Domain model
    "SensorType", "TypeDistribution", "DomainLayout", "ObjectInstance", "SensorTypeSpec",
    "vec_of_type", "uniform", "normalize",
    # Signals
    "Condition", "Signal", "EnvironmentState", "ConditionalTypeTable",
    "expert_weight", "posterior_given_signal", "sample_signal", "build_likelihoods", "draw_object",
    # Agents
    "Strategy", "ValueFunctionParams", "Report", "AgentState",
    "update_belief", "report_value", "report_cost", "instantaneous_reward", "clip_report",
    "make_report", "agent_expected_utility", "choose_strategy", "choose_report",
    # Market
    "MarketState", "MarketContext", "SettlementRecord",
    "decision_weight", "score_report", "payment", "aggregate_beliefs", "aggregate_beliefs_literal",
    "settle_market",
    # Decisions
    "DecisionSpec", "DecisionModel", "DecisionRecord", "Fleet",
    "standard_decision_set", "expected_utility", "decide", "apply_decision", "feasible_decisions",
    # Baselines and metrics
    "MassFunction", "FilterState", "ds_combine", "ds_classify", "pignistic", "ddf_update",
    "MetricSample", "rmse", "nmse_db", "kl_divergence", "evaluate",
    # Scenario, utils
    "ScenarioConfig", "load_scenario", "to_dict", "to_json",
    # Registry
    "FusionMethod", "Submission", "FusionRegistry", "get_global_registry", "register_default_methods",
    # Experiments
    "EpisodeRecord", "ExperimentResult", "run_episode", "run_experiment", "run_sweep",
    "emit_results", "emit_sweep",
]
