"""
scenario.py

Scenario configuration: the YAML document describing an experiment, and the
validated ScenarioConfig built from it.

The packaged config/default_scenario.yaml holds every default. A user file
is merged over it key by key, so it only needs the keys it changes. All
validation happens here, before the first step of any episode.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import yaml

from .decision_maker import (
    DecisionModel,
    DecisionSpec,
    Fleet,
    parse_deployment_label,
)
from .errors import ConfigurationError
from .model import DomainLayout, SensorType, SensorTypeSpec, TypeDistribution, normalize, uniform
from .sensor_agent import EPSILON_REPORT, MANIPULATIONS, ValueFunctionParams
from .signal_model import (
    Condition,
    ConditionalTypeTable,
    EnvironmentState,
    build_likelihoods,
    default_weight_table,
)

logger = logging.getLogger(__name__)

CONFIG_DIR = Path(__file__).parent / "config"
DEFAULT_SCENARIO_PATH = CONFIG_DIR / "default_scenario.yaml"


@dataclass(frozen=True)
class ObjectSpec:
    """
    An object an experiment classifies.

    Attributes:
        id (str): Object identifier.
        type_index (int): 1-based ground-truth type.
        features (Optional[Tuple[int, ...]]): Pinned true levels, or None to
            draw them from the type profiles every run.
    """

    id: str
    type_index: int
    features: Optional[Tuple[int, ...]] = None


@dataclass(frozen=True)
class ScenarioConfig:
    """
    Full, validated description of an experiment.

    Attributes:
        layout: Type and feature names.
        prior: Prior over types behind the signal posteriors.
        profiles: Per feature, (m x L) array of P(true level | type).
        objects: Objects to classify.
        sensors: Sensor family specs, including fleet counts.
        tables: Per sensor family, the signal -> posterior table.
        environment: Condition and expert weight table.
        w_bel: Weight of an agent's own signal in its belief update.
        malicious_fraction: Share of the fleet planted as malicious.
        malicious_agents: Explicit malicious agent ids (used when nonempty).
        manipulation: Name of the malicious manipulation model.
        report_every_step: False makes sensors report only on new readings.
        value_params: Value function parameters.
        epsilon_report: Clipping floor for reports.
        confidence: Stopping threshold on max_j B_j.
        window: Time window T.
        bootstrap: Sensors reporting at step 1.
        decisions: Decision set, in id order.
        decision_model: P(d | theta) table and utilities.
        feasible_only: Offer only decisions the fleet can fully satisfy.
        baselines: Per fusion method option blocks.
        seed: Base seed; run r uses seed + r.
        runs: Replications per (object, method).
        methods: Fusion methods compared by an experiment.
        source: File the scenario was read from, if any.
    """

    layout: DomainLayout
    prior: TypeDistribution
    profiles: Tuple[np.ndarray, ...]
    objects: Tuple[ObjectSpec, ...]
    sensors: Dict[SensorType, SensorTypeSpec]
    tables: Dict[SensorType, ConditionalTypeTable]
    environment: EnvironmentState
    decisions: Tuple[DecisionSpec, ...]
    decision_model: DecisionModel
    w_bel: float = 0.5
    malicious_fraction: float = 0.0
    malicious_agents: Tuple[str, ...] = ()
    manipulation: str = "swap_top_two"
    report_every_step: bool = True
    value_params: ValueFunctionParams = field(default_factory=ValueFunctionParams)
    epsilon_report: float = EPSILON_REPORT
    confidence: float = 0.95
    window: int = 10
    bootstrap: Dict[SensorType, int] = field(default_factory=lambda: {SensorType.MD: 1})
    feasible_only: bool = True
    baselines: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    seed: int = 42
    runs: int = 10
    methods: Tuple[str, ...] = ("pm", "ds", "ddf")
    source: Optional[Path] = None

    def __post_init__(self) -> None:
        if not 0.0 < self.confidence <= 1.0:
            raise ConfigurationError(f"stopping.confidence must lie in (0, 1], got {self.confidence}")
        if self.window < 1:
            raise ConfigurationError(f"stopping.window must be at least 1, got {self.window}")
        if self.runs < 1:
            raise ConfigurationError(f"experiment.runs must be at least 1, got {self.runs}")
        if not 0.0 <= self.w_bel <= 1.0:
            raise ConfigurationError(f"agents.w_bel must lie in [0, 1], got {self.w_bel}")
        if not 0.0 <= self.malicious_fraction <= 1.0:
            raise ConfigurationError(f"agents.malicious_fraction must lie in [0, 1], got {self.malicious_fraction}")
        if self.manipulation not in MANIPULATIONS:
            raise ConfigurationError(f"Unknown manipulation '{self.manipulation}'. Available: {sorted(MANIPULATIONS)}")
        if not 0.0 < self.epsilon_report < 1.0 / self.layout.m:
            raise ConfigurationError(f"mechanism.epsilon_report must lie in (0, 1/m), got {self.epsilon_report}")
        if self.prior.m != self.layout.m:
            raise ConfigurationError("prior length does not match the number of types")
        if not self.methods:
            raise ConfigurationError("experiment.methods must name at least one method")
        missing = [s.value for s in SensorType if s not in self.sensors or s not in self.tables]
        if missing:
            raise ConfigurationError(f"No sensor spec or table for {missing}")
        for sensor, count in self.bootstrap.items():
            if count > self.sensors[sensor].count_available:
                raise ConfigurationError(f"bootstrap deploys {count} {sensor.value}, fleet has {self.sensors[sensor].count_available}")
        for obj in self.objects:
            if not 1 <= obj.type_index <= self.layout.m:
                raise ConfigurationError(f"Object {obj.id} has type index {obj.type_index} outside 1..{self.layout.m}")
        roster = set(self.agent_ids())
        unknown = [a for a in self.malicious_agents if a not in roster]
        if unknown:
            raise ConfigurationError(f"Unknown malicious agent ids {unknown}; roster is {sorted(roster)}")
        if self.decision_model.m != self.layout.m:
            raise ConfigurationError("decisions.utilities must give one value per type")
        self.decision_model.validate_for(self.decisions)

    @property
    def m(self) -> int:
        return self.layout.m

    @property
    def f(self) -> int:
        return self.layout.f

    def fleet(self) -> Fleet:
        """Full fleet, before the bootstrap deployment."""
        return Fleet({s: spec.count_available for s, spec in self.sensors.items()})

    def agent_ids(self) -> List[str]:
        """Roster in deployment order: MD-1..MD-k, IR-1.., GPR-1.."""
        return [
            f"{sensor.value}-{i}"
            for sensor in SensorType
            for i in range(1, self.sensors[sensor].count_available + 1)
        ]

    def method_options(self, canonical_name: str) -> Dict[str, Any]:
        return dict(self.baselines.get(canonical_name, {}))

    def with_overrides(self, **changes: Any) -> "ScenarioConfig":
        """
        Copy with some fields changed; a `condition` key replaces the
        environment condition. The copy is validated again.
        """
        condition = changes.pop("condition", None)
        if condition is not None:
            changes["environment"] = EnvironmentState(Condition.parse(condition), self.environment.weights)
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes)


# -------------------------------------------------------------------------
# Loading
# -------------------------------------------------------------------------


def _read_yaml(path: Path) -> Dict[str, Any]:
    try:
        with path.open("r", encoding="utf-8") as f:
            doc = yaml.safe_load(f) or {}
    except FileNotFoundError:
        raise ConfigurationError(f"Scenario file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"Invalid YAML in {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigurationError(f"Scenario file {path} must contain a mapping at the top level")
    return doc


def merge_documents(base: Mapping[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    """Recursive merge of mappings; anything else in override replaces base."""
    merged = copy.deepcopy(dict(base))
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = merge_documents(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _section(doc: Mapping[str, Any], key: str) -> Mapping[str, Any]:
    value = doc.get(key, {})
    if not isinstance(value, Mapping):
        raise ConfigurationError(f"'{key}' must be a mapping")
    return value


def _probability_row(values: Any, length: int, where: str) -> np.ndarray:
    try:
        row = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{where} must be a list of numbers") from None
    if row.shape != (length,):
        raise ConfigurationError(f"{where} must have {length} values, got {np.shape(values)}")
    if np.any(row < 0) or abs(row.sum() - 1.0) > 1e-6:
        raise ConfigurationError(f"{where} must be a probability distribution, got {row.tolist()}")
    return row


def _layout(doc: Mapping[str, Any]) -> DomainLayout:
    features = _section(doc, "features")
    try:
        return DomainLayout(
            type_names=tuple(str(t) for t in doc.get("types", ())),
            feature_names=tuple(str(name) for name in features),
            feature_levels=tuple(tuple(str(level) for level in levels) for levels in features.values()),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"Invalid types/features: {exc}") from None


def _profiles(doc: Mapping[str, Any], layout: DomainLayout) -> Tuple[np.ndarray, ...]:
    section = _section(doc, "profiles")
    profiles = []
    for name, levels in zip(layout.feature_names, layout.feature_levels):
        if name not in section:
            raise ConfigurationError(f"profiles.{name} is missing")
        rows = section[name]
        try:
            profiles.append(
                np.vstack(
                    [_probability_row(rows[t], len(levels), f"profiles.{name}.{t}") for t in layout.type_names]
                )
            )
        except KeyError as exc:
            raise ConfigurationError(f"profiles.{name} has no row for type {exc}") from None
    return tuple(profiles)


def _sensors(
    doc: Mapping[str, Any],
    layout: DomainLayout,
    profiles: Sequence[np.ndarray],
    prior: TypeDistribution,
) -> Tuple[Dict[SensorType, SensorTypeSpec], Dict[SensorType, ConditionalTypeTable]]:
    section = _section(doc, "sensors")
    specs: Dict[SensorType, SensorTypeSpec] = {}
    tables: Dict[SensorType, ConditionalTypeTable] = {}
    for key, entry in section.items():
        try:
            sensor = SensorType.parse(key)
        except ValueError as exc:
            raise ConfigurationError(f"sensors: {exc}") from None
        noise_doc = entry.get("noise", {})
        try:
            noise = tuple(float(noise_doc[name]) for name in layout.feature_names)
        except KeyError as exc:
            raise ConfigurationError(f"sensors.{sensor.value}.noise is missing feature {exc}") from None
        overrides = {
            name: np.asarray(table, dtype=np.float64)
            for name, table in (entry.get("likelihoods") or {}).items()
        }
        unknown = set(overrides) - set(layout.feature_names)
        if unknown:
            raise ConfigurationError(f"sensors.{sensor.value}.likelihoods names unknown features {sorted(unknown)}")
        try:
            spec = SensorTypeSpec(
                name=sensor,
                noise_level=noise,
                report_cost=float(entry.get("cost", 0.0)),
                count_available=int(entry.get("count", 0)),
            )
        except ValueError as exc:
            raise ConfigurationError(f"sensors.{sensor.value}: {exc}") from None
        derived = build_likelihoods(profiles, noise)
        likelihoods = [
            overrides.get(name, table) for name, table in zip(layout.feature_names, derived)
        ]
        specs[sensor] = spec
        tables[sensor] = ConditionalTypeTable.from_likelihoods(prior, likelihoods)
    return specs, tables


def _environment(doc: Mapping[str, Any]) -> EnvironmentState:
    section = _section(doc, "environment")
    overrides = {}
    for sensor_key, by_condition in (section.get("weights") or {}).items():
        for condition_key, weight in by_condition.items():
            try:
                overrides[(SensorType.parse(sensor_key), Condition.parse(condition_key))] = float(weight)
            except ValueError as exc:
                raise ConfigurationError(f"environment.weights: {exc}") from None
    return EnvironmentState(
        condition=Condition.parse(section.get("condition", "clear")),
        weights=default_weight_table(overrides),
    )


def _decisions(doc: Mapping[str, Any], layout: DomainLayout) -> Tuple[Tuple[DecisionSpec, ...], DecisionModel]:
    section = _section(doc, "decisions")
    utilities_doc = section.get("utilities", {})
    try:
        utilities = tuple(float(utilities_doc[t]) for t in layout.type_names)
    except KeyError as exc:
        raise ConfigurationError(f"decisions.utilities has no value for type {exc}") from None
    probabilities = section.get("probabilities") or {}
    if not probabilities:
        raise ConfigurationError("decisions.probabilities is empty")
    decisions = []
    p_table: Dict[Tuple[int, int], float] = {}
    for decision_id, (label, row) in enumerate(probabilities.items()):
        try:
            decisions.append(DecisionSpec(id=decision_id, deployment=parse_deployment_label(label)))
        except ValueError as exc:
            raise ConfigurationError(f"decisions.probabilities.{label}: {exc}") from None
        values = np.asarray(row, dtype=np.float64)
        if values.shape != (layout.m,):
            raise ConfigurationError(f"decisions.probabilities.{label} must have {layout.m} values")
        for j, p in enumerate(values, start=1):
            p_table[(decision_id, j)] = float(p)
    return tuple(decisions), DecisionModel(p_table=p_table, utilities=utilities)


def _objects(doc: Mapping[str, Any], layout: DomainLayout) -> Tuple[ObjectSpec, ...]:
    objects = []
    for i, entry in enumerate(doc.get("objects") or []):
        try:
            type_index = layout.type_index(str(entry["type"]))
        except (KeyError, ValueError) as exc:
            raise ConfigurationError(f"objects[{i}]: {exc}") from None
        features = None
        if entry.get("features"):
            pinned = entry["features"]
            try:
                features = tuple(
                    layout.feature_levels[k].index(str(pinned[name]))
                    for k, name in enumerate(layout.feature_names)
                )
            except (KeyError, ValueError) as exc:
                raise ConfigurationError(f"objects[{i}].features: {exc}") from None
        objects.append(ObjectSpec(id=str(entry.get("id", f"object-{i + 1}")), type_index=type_index, features=features))
    if not objects:
        raise ConfigurationError("At least one object is required")
    return tuple(objects)


def scenario_from_dict(doc: Mapping[str, Any], source: Optional[Path] = None) -> ScenarioConfig:
    """
    Build and validate a ScenarioConfig from a complete scenario document.

    Raises:
        ConfigurationError: On any missing or inconsistent value.
    """
    layout = _layout(doc)
    prior = normalize(doc["prior"]) if doc.get("prior") is not None else uniform(layout.m)
    if prior.m != layout.m:
        raise ConfigurationError(f"prior has {prior.m} values for {layout.m} types")
    profiles = _profiles(doc, layout)
    sensors, tables = _sensors(doc, layout, profiles, prior)
    decisions, decision_model = _decisions(doc, layout)
    agents = _section(doc, "agents")
    mechanism = _section(doc, "mechanism")
    stopping = _section(doc, "stopping")
    experiment = _section(doc, "experiment")
    try:
        value_params = ValueFunctionParams(
            nu=float(mechanism.get("nu", 5)),
            n_threshold=int(mechanism.get("n_threshold", 5)),
            n_max=int(mechanism.get("n_max", 20)),
        )
        bootstrap = {SensorType.parse(k): int(v) for k, v in (doc.get("bootstrap") or {}).items() if int(v) > 0}
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None

    config = ScenarioConfig(
        layout=layout,
        prior=prior,
        profiles=profiles,
        objects=_objects(doc, layout),
        sensors=sensors,
        tables=tables,
        environment=_environment(doc),
        decisions=decisions,
        decision_model=decision_model,
        w_bel=float(agents.get("w_bel", 0.5)),
        malicious_fraction=float(agents.get("malicious_fraction", 0.0)),
        malicious_agents=tuple(str(a) for a in agents.get("malicious") or ()),
        manipulation=str(agents.get("manipulation", "swap_top_two")),
        report_every_step=bool(agents.get("report_every_step", True)),
        value_params=value_params,
        epsilon_report=float(mechanism.get("epsilon_report", EPSILON_REPORT)),
        confidence=float(stopping.get("confidence", 0.95)),
        window=int(stopping.get("window", 10)),
        bootstrap=bootstrap,
        feasible_only=bool(_section(doc, "decisions").get("feasible_only", True)),
        baselines={str(k): dict(v or {}) for k, v in _section(doc, "baselines").items()},
        seed=int(experiment.get("seed", 42)),
        runs=int(experiment.get("runs", 10)),
        methods=tuple(str(m) for m in experiment.get("methods") or ("pm", "ds", "ddf")),
        source=source,
    )
    return config


def load_scenario(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> ScenarioConfig:
    """
    Load a scenario: the packaged default, the user file merged over it, then
    an optional mapping of overrides merged over both.

    Args:
        path: User scenario file. None uses the packaged default alone.
        overrides: Document fragment, e.g. {"stopping": {"window": 1}}.

    Raises:
        ConfigurationError: If a file is missing, unparsable or inconsistent.
    """
    doc = _read_yaml(DEFAULT_SCENARIO_PATH)
    source = None
    if path is not None:
        source = Path(path)
        doc = merge_documents(doc, _read_yaml(source))
    if overrides:
        doc = merge_documents(doc, overrides)
    config = scenario_from_dict(doc, source=source)
    logger.info(
        f"Loaded scenario from {source or DEFAULT_SCENARIO_PATH}: "
        f"{len(config.objects)} objects, methods={list(config.methods)}, runs={config.runs}"
    )
    return config
