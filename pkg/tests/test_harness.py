"""
test_harness.py

Tests for the episode loop: deployment, stopping, settlement and
determinism.
"""

import numpy as np
import pytest

from pm_fusion.harness import (
    AgentProfile,
    _deploy,
    build_roster,
    prepare_episode,
    run_episode,
    run_experiment,
    run_sweep,
    summarize,
)
from pm_fusion.model import SensorType
from pm_fusion.scenario import ObjectSpec, load_scenario
from pm_fusion.sensor_agent import Strategy
from pm_fusion.utils import to_json

MD, IR, GPR = SensorType.MD, SensorType.IR, SensorType.GPR

NOISELESS_MD = {
    "sensors": {"MD": {"noise": {"metal_content": 0.0, "area": 0.0, "depth": 0.0, "sensor_position": 0.0}}}
}


@pytest.fixture(scope="module")
def pm_episode(default_config):
    return run_episode(default_config, seed=7, method="pm", object_spec=default_config.objects[0])


def test_single_step_window(default_config, registry):
    config = default_config.with_overrides(window=1)
    record = run_episode(config, seed=1, method="pm", registry=registry)
    assert record.steps_used == 1
    assert record.steps[0].decision is None
    assert set(record.settlement) == {"MD-1"}


def test_bootstrap_deployment(pm_episode):
    first = pm_episode.steps[0]
    assert first.time == 1
    assert first.active == ("MD-1",)
    assert first.joined == {MD: 1}
    assert [r.agent_id for r in first.reports] == ["MD-1"]
    assert first.strategies == {"MD-1": "truthful"}


def test_deployed_sensors_join_next_step(pm_episode):
    for before, after in zip(pm_episode.steps, pm_episode.steps[1:]):
        deployed = before.decision.deployed if before.decision else {}
        assert after.joined == {s: n for s, n in deployed.items() if n}
        assert len(after.active) == len(before.active) + sum(deployed.values())


def test_fleet_limits_respected(default_config, pm_episode):
    totals = pm_episode.deployed_totals()
    for sensor, count in totals.items():
        assert count <= default_config.sensors[sensor].count_available


def test_stops_at_confidence(default_config, registry):
    """max_j B_j >= 1/m always, so a threshold below 1/m stops at step 1."""
    config = default_config.with_overrides(confidence=0.3)
    record = run_episode(config, seed=3, method="ddf", registry=registry)
    assert record.steps_used == 1
    assert record.steps[0].decision is None


def test_episode_properties(pm_episode):
    assert pm_episode.method == "pm"
    assert pm_episode.object_type == "mine"
    assert pm_episode.true_type == 1
    assert pm_episode.final_belief == pm_episode.steps[-1].aggregate
    assert pm_episode.correct == (pm_episode.classified_type == 1)
    last = pm_episode.steps[-1].metrics.rmse
    assert pm_episode.metric_at(50, "rmse") == last


def test_stopping_rule_consistency(default_config, pm_episode):
    for step in pm_episode.steps[:-1]:
        assert step.aggregate.max() < default_config.confidence
    assert pm_episode.steps_used == default_config.window or pm_episode.final_belief.max() >= default_config.confidence


def test_settlement_only_for_market(default_config, registry):
    inputs = prepare_episode(default_config, 5, default_config.objects[1])
    pm = run_episode(default_config, 5, "pm", default_config.objects[1], registry=registry, inputs=inputs)
    ds = run_episode(default_config, 5, "ds", default_config.objects[1], registry=registry, inputs=inputs)
    assert set(pm.settlement) == set(pm.agents)
    assert ds.settlement == {}
    for entry in pm.settlement.values():
        assert entry.total == pytest.approx(entry.rewards_sum + entry.score)
        assert entry.reports == pm.agents[entry.agent_id].reports_made


def test_methods_see_identical_signals(default_config, registry):
    inputs = prepare_episode(default_config, 11, default_config.objects[2])
    records = [
        run_episode(default_config, 11, name, default_config.objects[2], registry=registry, inputs=inputs)
        for name in ("pm", "ds", "ddf")
    ]
    first_reports = [tuple(r.values.tolist() for r in rec.steps[0].reports) for rec in records]
    assert first_reports[0] == first_reports[1] == first_reports[2]
    assert len({rec.object_id for rec in records}) == 1


def test_prepare_episode_deterministic(default_config):
    a = prepare_episode(default_config, 21, default_config.objects[0])
    b = prepare_episode(default_config, 21, default_config.objects[0])
    assert a.obj == b.obj
    assert a.signals == b.signals
    assert all(len(readings) == default_config.window for readings in a.signals.values())


def test_run_episode_deterministic(default_config, registry):
    first = run_episode(default_config, 13, "pm", registry=registry)
    second = run_episode(default_config, 13, "pm", registry=registry)
    assert to_json(first) == to_json(second)


def test_pinned_object_is_used():
    config = load_scenario(
        overrides={
            "objects": [
                {
                    "id": "pinned",
                    "type": "metallic",
                    "features": {"metal_content": "high", "area": "large", "depth": "deep", "sensor_position": "far"},
                }
            ]
        }
    )
    inputs = prepare_episode(config, 0, config.objects[0])
    assert inputs.obj.features == (2, 2, 2, 2)
    assert inputs.obj.true_type == 2


def test_build_roster_fraction(default_config):
    config = default_config.with_overrides(malicious_fraction=0.3)
    roster = build_roster(config, np.random.default_rng(0))
    assert len(roster) == 10
    assert sum(p.strategy is Strategy.MALICIOUS for p in roster) == 3


def test_build_roster_explicit(default_config):
    config = default_config.with_overrides(malicious_agents=("IR-2",))
    roster = build_roster(config, np.random.default_rng(0))
    assert [p.id for p in roster if p.strategy is Strategy.MALICIOUS] == ["IR-2"]


def test_malicious_agents_always_manipulate(default_config, registry):
    config = default_config.with_overrides(malicious_agents=("MD-1",))
    record = run_episode(config, 2, "pm", registry=registry)
    for step in record.steps:
        if "MD-1" in step.strategies:
            assert step.strategies["MD-1"] == "malicious"
    assert record.agents["MD-1"].is_malicious


def test_deploy_takes_lowest_free_ids():
    roster = [AgentProfile(f"MD-{i}", MD, Strategy.TRUTHFUL) for i in range(1, 4)] + [
        AgentProfile("GPR-1", GPR, Strategy.TRUTHFUL)
    ]
    chosen = _deploy({MD: 1, GPR: 1}, roster, taken={"MD-1"})
    assert [p.id for p in chosen] == ["MD-2", "GPR-1"]
    assert _deploy({IR: 1}, roster, taken=()) == []


def test_unchanged_readings_are_not_resubmitted(registry):
    config = load_scenario(overrides={**NOISELESS_MD, "agents": {"report_every_step": False}})
    record = run_episode(config, 4, "pm", registry=registry)
    assert record.agents["MD-1"].reports_made == 1


def test_unknown_method(default_config, registry):
    with pytest.raises(KeyError, match="not registered"):
        run_episode(default_config, 0, "kalman", registry=registry)


def test_small_experiment(default_config, registry):
    config = default_config.with_overrides(runs=2)
    result = run_experiment(config, methods=["pm", "DDF"], registry=registry)
    assert result.methods == ("pm", "ddf")
    assert len(result.episodes) == 2 * len(config.objects) * 2
    assert [e.run_index for e in result.episodes[:4]] == [0, 0, 0, 0]
    assert {e.seed for e in result.episodes} == {config.seed, config.seed + 1}
    assert len(result.select("pm", "mine")) == 2
    summary = result.summary()
    assert len(summary) == config.window * 2 * 3
    assert all(row.stdev >= 0 for row in summary)
    with pytest.raises(ValueError, match="No episodes"):
        result.mean_final("ds", "rmse")
    assert 1 <= result.mean_steps("pm") <= config.window


def test_summarize_carries_forward(default_config, registry):
    config = default_config.with_overrides(confidence=0.3)
    episodes = [run_episode(config, s, "pm", registry=registry) for s in range(3)]
    rows = summarize(episodes, ["pm"], window=4)
    rmse_rows = [r for r in rows if r.metric == "rmse"]
    assert len(rmse_rows) == 4
    assert len({round(r.mean, 12) for r in rmse_rows}) == 1


def test_run_sweep(default_config, registry):
    config = default_config.with_overrides(runs=1)
    sweep = run_sweep(config, [0.2, 0.8], methods=["pm"], registry=registry)
    assert list(sweep) == [0.2, 0.8]
    assert sweep[0.8].config.w_bel == pytest.approx(0.8)


def test_object_spec_validation(default_config):
    with pytest.raises(ValueError):
        prepare_episode(default_config, 0, ObjectSpec(id="bad", type_index=1, features=(0, 0)))
