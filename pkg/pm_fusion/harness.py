"""
harness.py

Episode loop and multi-run experiments.

One episode classifies one object with one fusion method. Every step:

1. each deployed agent reads a signal, updates its belief, picks a strategy
   and submits a report; the market maker books its instantaneous reward;
2. the fusion method aggregates the step's reports;
3. metrics against the true type are recorded;
4. unless the stopping rule fires, the decision maker picks a deployment and
   the new sensors join at the next step.

When the window closes the true type is revealed and, for the prediction
market, the market is settled.

Signals are drawn before any method-specific processing, from a stream
owned by the (seed, object) pair, so every method sees identical data.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .decision_maker import (
    DecisionRecord,
    apply_decision,
    decide,
    feasible_decisions,
)
from .fusion_base import Submission
from .fusion_registry import FusionRegistry, get_global_registry
from .market import MarketContext, MarketState, SettlementRecord, settle_market
from .metrics import METRIC_NAMES, MetricSample, evaluate
from .model import ObjectInstance, SensorType, TypeDistribution
from .scenario import ObjectSpec, ScenarioConfig
from .sensor_agent import (
    AgentState,
    Report,
    Strategy,
    choose_report,
    instantaneous_reward,
    make_report,
    report_cost,
    report_value,
)
from .signal_model import Signal, draw_object, expert_weight, posterior_given_signal, sample_signal

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AgentProfile:
    """Roster entry: who the agent is and whether it was planted as malicious."""

    id: str
    sensor_type: SensorType
    strategy: Strategy


@dataclass(frozen=True)
class EpisodeInputs:
    """
    Method-independent inputs of an episode.

    Attributes:
        obj (ObjectInstance): Object with its true type and features.
        roster (Tuple[AgentProfile, ...]): Whole fleet in deployment order.
        signals (Dict[str, Tuple[Signal, ...]]): Per agent, its reading at
            steps 1..T (index t - 1), whether or not it gets deployed.
        seed (int): Seed the inputs were drawn from.
    """

    obj: ObjectInstance
    roster: Tuple[AgentProfile, ...]
    signals: Dict[str, Tuple[Signal, ...]]
    seed: int

    def profile(self, agent_id: str) -> AgentProfile:
        for entry in self.roster:
            if entry.id == agent_id:
                return entry
        raise KeyError(f"Unknown agent '{agent_id}'")


@dataclass(frozen=True)
class StepRecord:
    """
    What happened at one step.

    Attributes:
        time (int): Step.
        active (Tuple[str, ...]): Agents able to perceive the object.
        joined (Dict[SensorType, int]): Sensors that started perceiving at this step.
        reports (Tuple[Report, ...]): Reports received.
        strategies (Dict[str, str]): Strategy each reporting agent used.
        aggregate (TypeDistribution): Output of the fusion method.
        metrics (MetricSample): Metrics of the aggregate.
        decision (Optional[DecisionRecord]): Deployment decided after the step.
    """

    time: int
    active: Tuple[str, ...]
    joined: Dict[SensorType, int]
    reports: Tuple[Report, ...]
    strategies: Dict[str, str]
    aggregate: TypeDistribution
    metrics: MetricSample
    decision: Optional[DecisionRecord] = None


@dataclass
class EpisodeRecord:
    """
    Full trace of one episode.

    Attributes:
        method (str): Canonical fusion method name.
        object_id (str): Object identifier.
        object_type (str): Name of the true type.
        true_type (int): 1-based true type.
        seed (int): Episode seed.
        run_index (int): Replication index.
        steps (List[StepRecord]): One record per step taken.
        agents (Dict[str, AgentState]): Every agent that was deployed.
        settlement (Dict[str, SettlementRecord]): Final payments (pm only).
    """

    method: str
    object_id: str
    object_type: str
    true_type: int
    seed: int
    run_index: int
    steps: List[StepRecord] = field(default_factory=list)
    agents: Dict[str, AgentState] = field(default_factory=dict)
    settlement: Dict[str, SettlementRecord] = field(default_factory=dict)

    @property
    def steps_used(self) -> int:
        return len(self.steps)

    @property
    def final_belief(self) -> TypeDistribution:
        return self.steps[-1].aggregate

    @property
    def classified_type(self) -> int:
        return self.final_belief.argmax()

    @property
    def correct(self) -> bool:
        return self.classified_type == self.true_type

    @property
    def final_metrics(self) -> MetricSample:
        return self.steps[-1].metrics

    def deployed_totals(self) -> Dict[SensorType, int]:
        totals = {s: 0 for s in SensorType}
        for agent in self.agents.values():
            totals[agent.sensor_type] += 1
        return totals

    def metric_at(self, time: int, metric: str) -> float:
        """Metric value at a step; after an early stop the last value carries forward."""
        index = min(time, self.steps_used) - 1
        return self.steps[index].metrics.value(metric)


def build_roster(config: ScenarioConfig, rng: np.random.Generator) -> Tuple[AgentProfile, ...]:
    """Whole fleet with dispositions; malicious agents are drawn when not listed."""
    ids = config.agent_ids()
    if config.malicious_agents:
        malicious = set(config.malicious_agents)
    else:
        k = int(round(config.malicious_fraction * len(ids)))
        malicious = {str(a) for a in rng.choice(ids, size=k, replace=False)} if k else set()
    return tuple(
        AgentProfile(
            id=agent_id,
            sensor_type=SensorType.parse(agent_id.rsplit("-", 1)[0]),
            strategy=Strategy.MALICIOUS if agent_id in malicious else Strategy.TRUTHFUL,
        )
        for agent_id in ids
    )


def prepare_episode(config: ScenarioConfig, seed: int, object_spec: ObjectSpec) -> EpisodeInputs:
    """
    Draw the object, the roster dispositions and every agent's readings.

    Deterministic given (config, seed, object_spec).
    """
    rng = np.random.default_rng(seed)
    if object_spec.features is not None:
        obj = ObjectInstance(id=object_spec.id, true_type=object_spec.type_index, features=object_spec.features)
        obj.check_layout(config.layout)
    else:
        obj = draw_object(object_spec.id, object_spec.type_index, config.profiles, rng, config.layout)
    roster = build_roster(config, rng)
    level_counts = config.layout.level_counts
    signals = {
        agent.id: tuple(
            sample_signal(obj, config.sensors[agent.sensor_type], config.environment, rng, level_counts, t)
            for t in range(1, config.window + 1)
        )
        for agent in roster
    }
    return EpisodeInputs(obj=obj, roster=roster, signals=signals, seed=seed)


def _report_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])


def _deploy(
    counts: Dict[SensorType, int],
    roster: Sequence[AgentProfile],
    taken: Iterable[str],
) -> List[AgentProfile]:
    taken = set(taken)
    chosen: List[AgentProfile] = []
    for sensor in SensorType:
        need = counts.get(sensor, 0)
        for agent in roster:
            if need == 0:
                break
            if agent.sensor_type is sensor and agent.id not in taken:
                chosen.append(agent)
                need -= 1
    return chosen


def run_episode(
    config: ScenarioConfig,
    seed: int,
    method: str,
    object_spec: Optional[ObjectSpec] = None,
    run_index: int = 0,
    registry: Optional[FusionRegistry] = None,
    inputs: Optional[EpisodeInputs] = None,
) -> EpisodeRecord:
    """
    Run one object through one fusion method.

    Args:
        config: Validated scenario.
        seed: Episode seed.
        method: Fusion method name or alias.
        object_spec: Object to classify; defaults to the scenario's first object.
        run_index: Replication index stored in the record.
        registry: Method registry; defaults to the global one.
        inputs: Pre-drawn inputs, shared between methods of the same run.

    Returns:
        EpisodeRecord with the step trace and, for pm, the settlement.
    """
    registry = registry or get_global_registry()
    canonical = registry.canonical_name(method)
    object_spec = object_spec or config.objects[0]
    inputs = inputs or prepare_episode(config, seed, object_spec)
    obj = inputs.obj
    m = config.m
    truth = obj.truth(m)

    fusion = registry.get_method(canonical, config.method_options(canonical))
    fusion.reset(config.layout, config.prior)

    model = config.decision_model
    p_matrix = model.matrix(config.decisions)
    report_rng = _report_rng(seed)
    market = MarketState(object_id=obj.id, m=m, window=config.window)
    record = EpisodeRecord(
        method=canonical,
        object_id=obj.id,
        object_type=config.layout.type_name(obj.true_type),
        true_type=obj.true_type,
        seed=seed,
        run_index=run_index,
    )

    fleet = config.fleet()
    fleet, _, _ = fleet.deploy(config.bootstrap)
    pending = _deploy(config.bootstrap, inputs.roster, ())
    active: List[AgentProfile] = []
    previous = market.current_belief()

    for t in range(1, config.window + 1):
        joined: Dict[SensorType, int] = {}
        for profile in pending:
            joined[profile.sensor_type] = joined.get(profile.sensor_type, 0) + 1
            record.agents[profile.id] = AgentState(
                id=profile.id,
                sensor_type=profile.sensor_type,
                belief=previous,
                strategy=profile.strategy,
                w_bel=config.w_bel,
            )
        active.extend(pending)
        pending = []

        submissions: List[Submission] = []
        rewards: Dict[str, float] = {}
        strategies: Dict[str, str] = {}
        for profile in active:
            agent = record.agents[profile.id]
            spec = config.sensors[profile.sensor_type]
            signal = inputs.signals[profile.id][t - 1]
            if not config.report_every_step and agent.last_reading == signal.values:
                continue
            agent.observe(posterior_given_signal(signal, config.tables[profile.sensor_type]), previous)
            cost = report_cost(agent, spec)
            context = MarketContext(
                varpi=market.varpi_estimate(model.p_table, model.utilities),
                p_table=p_matrix,
                time=t,
                window=config.window,
                value_params=config.value_params,
                report_cost=cost,
                rng=report_rng,
                epsilon=config.epsilon_report,
                manipulation=config.manipulation,
            )
            if agent.is_malicious:
                strategy = Strategy.MALICIOUS
                values = make_report(agent.belief, strategy, report_rng, config.epsilon_report, config.manipulation)
            else:
                strategy, values = choose_report(agent, (Strategy.TRUTHFUL, Strategy.MALICIOUS), context)
            weight = expert_weight(profile.sensor_type, config.environment, t)
            reward = instantaneous_reward(report_value(agent.reports_made + 1, config.value_params), cost)
            agent.record_report(reward, signal.values)
            report = Report(agent_id=agent.id, time=t, values=values, expert_weight=weight)
            submissions.append(Submission(report=report, signal=signal, sensor=spec, strategy=strategy))
            rewards[agent.id] = reward
            strategies[agent.id] = strategy.value

        aggregate = fusion.run_step(t, submissions) if submissions else previous
        reports = [s.report for s in submissions]
        market.record_step(t, reports, aggregate)
        for report in reports:
            market.record_reward(report.agent_id, t, report.expert_weight, rewards[report.agent_id])
        metrics = evaluate(aggregate, truth, canonical, t)

        decision = None
        if aggregate.max() < config.confidence and t < config.window:
            offered = feasible_decisions(config.decisions, fleet) if config.feasible_only else list(config.decisions)
            if offered:
                decision = decide(aggregate, offered, model, time=t)
                fleet, decision = apply_decision(decision, fleet)
                market.record_decision(decision)
                pending = _deploy(decision.deployed, inputs.roster, record.agents)

        record.steps.append(
            StepRecord(
                time=t,
                active=tuple(p.id for p in active),
                joined=joined,
                reports=tuple(reports),
                strategies=strategies,
                aggregate=aggregate,
                metrics=metrics,
                decision=decision,
            )
        )
        previous = aggregate
        if aggregate.max() >= config.confidence:
            logger.debug(f"{canonical}/{obj.id}: confidence {aggregate.max():.4f} reached at step {t}")
            break

    market.close()
    if fusion.settles_market():
        record.settlement = settle_market(market, obj.true_type, model.p_table, model.utilities, record.agents)
    logger.debug(
        f"Episode {canonical}/{obj.id} seed={seed}: {record.steps_used} steps, "
        f"classified {record.classified_type} (true {obj.true_type})"
    )
    return record


class SummaryRow(NamedTuple):
    time: int
    method: str
    metric: str
    mean: float
    stdev: float


@dataclass
class ExperimentResult:
    """Episodes of an experiment, in (run, object, method) order."""

    config: ScenarioConfig
    methods: Tuple[str, ...]
    episodes: List[EpisodeRecord] = field(default_factory=list)

    def select(self, method: Optional[str] = None, object_type: Optional[str] = None) -> List[EpisodeRecord]:
        return [
            e
            for e in self.episodes
            if (method is None or e.method == method) and (object_type is None or e.object_type == object_type)
        ]

    def summary(self) -> List[SummaryRow]:
        return summarize(self.episodes, self.methods, self.config.window)

    def mean_final(self, method: str, metric: str, object_type: Optional[str] = None) -> float:
        """Mean over episodes of a metric at the stopping step."""
        values = [e.final_metrics.value(metric) for e in self.select(method, object_type)]
        if not values:
            raise ValueError(f"No episodes for method '{method}'")
        return float(np.mean(values))

    def mean_steps(self, method: str, object_type: Optional[str] = None) -> float:
        values = [e.steps_used for e in self.select(method, object_type)]
        if not values:
            raise ValueError(f"No episodes for method '{method}'")
        return float(np.mean(values))


def summarize(
    episodes: Sequence[EpisodeRecord],
    methods: Sequence[str],
    window: int,
) -> List[SummaryRow]:
    """
    Mean and population standard deviation of every metric, per step and method.

    Episodes that stopped early contribute their last values to later steps.
    """
    rows: List[SummaryRow] = []
    for t in range(1, window + 1):
        for method in methods:
            selected = [e for e in episodes if e.method == method]
            if not selected:
                continue
            for metric in METRIC_NAMES:
                values = np.array([e.metric_at(t, metric) for e in selected])
                rows.append(SummaryRow(t, method, metric, float(values.mean()), float(values.std())))
    return rows


def run_experiment(
    config: ScenarioConfig,
    methods: Optional[Sequence[str]] = None,
    registry: Optional[FusionRegistry] = None,
) -> ExperimentResult:
    """
    Run every (object, method) pair config.runs times.

    Run r uses seed config.seed + r for all objects and methods; the inputs of
    an (object, run) pair are drawn once and shared by the methods.
    """
    registry = registry or get_global_registry()
    names = tuple(registry.canonical_name(m) for m in (methods or config.methods))
    result = ExperimentResult(config=config, methods=names)
    for run_index in range(config.runs):
        seed = config.seed + run_index
        for object_spec in config.objects:
            inputs = prepare_episode(config, seed, object_spec)
            for name in names:
                result.episodes.append(
                    run_episode(config, seed, name, object_spec, run_index, registry, inputs)
                )
    logger.info(
        f"Experiment finished: {len(result.episodes)} episodes "
        f"({config.runs} runs x {len(config.objects)} objects x {len(names)} methods)"
    )
    return result


def run_sweep(
    config: ScenarioConfig,
    w_bel_values: Sequence[float],
    methods: Optional[Sequence[str]] = None,
    registry: Optional[FusionRegistry] = None,
) -> Dict[float, ExperimentResult]:
    """Repeat the experiment for several w_bel values."""
    return {
        float(w): run_experiment(config.with_overrides(w_bel=float(w)), methods, registry)
        for w in w_bel_values
    }
